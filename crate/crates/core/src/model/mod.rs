//! Semi-synchronous execution engine.
//!
//! Time is a sequence of instants. At each instant a nonempty set of robots
//! is active; each active robot observes the configuration in its own
//! frame, computes a destination and moves towards it by at most its reach
//! `sigma`. All active robots see the same pre-step configuration.

mod frame;
mod schedule;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

pub use frame::LocalFrame;
pub use schedule::{ActivationSchedule, Scheduler, DEFAULT_WINDOW};
pub use trace::{
    quantize, quantize_point, Event, MessageId, RobotMeta, RunMeta, Trace, TraceRecord,
    TRACE_FORMAT,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("robot {robot} chose a non-finite destination at instant {t}")]
    NonFiniteDestination { robot: usize, t: usize },
    #[error("empty active set at instant {0}")]
    EmptyActiveSet(usize),
    #[error("unknown robot {0}")]
    UnknownRobot(usize),
    #[error("explicit schedule has no active set for instant {0}")]
    ScheduleExhausted(usize),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("{specs} robot specs for {positions} positions and {programs} programs")]
    CountMismatch {
        positions: usize,
        specs: usize,
        programs: usize,
    },
    #[error("invalid robot {robot}: {reason}")]
    InvalidRobot { robot: usize, reason: String },
}

/// Why a message could not be queued.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SendError {
    #[error("message has no bits")]
    Empty,
    #[error("a robot cannot address itself")]
    SelfAddressed,
    #[error("no robot is labeled {0}")]
    UnknownLabel(usize),
}

/// Positions of all robots at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub time: usize,
    pub positions: Vec<Point>,
}

impl Configuration {
    pub fn initial(positions: Vec<Point>) -> Self {
        Configuration { time: 0, positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    /// Longest distance covered in one activation, in global units.
    pub sigma: f64,
    pub visible_id: Option<u32>,
    pub frame: LocalFrame,
}

/// What a robot perceives when it wakes up, in its own frame.
///
/// `positions` is indexed consistently across instants. Anonymous protocols
/// use the index only to follow a robot from one observation to the next,
/// which they could equally do from the granular each robot never leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    pub me: usize,
    pub positions: Vec<Point>,
    /// Present only when robots carry observable identifiers.
    pub visible_ids: Option<Vec<u32>>,
}

impl View {
    pub fn own_position(&self) -> Point {
        self.positions[self.me]
    }
}

/// Output of one activation: where to go (local frame) and what happened.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Decision {
    pub destination: Point,
    pub events: Vec<Event>,
}

/// A robot's algorithm together with its memory.
pub trait Program: Send + Sync {
    fn activate(&mut self, view: &View) -> Decision;

    /// Short description of the current phase, recorded in traces.
    fn phase(&self) -> String;

    /// Queues `bits` for the robot this program calls `label`.
    fn enqueue(&mut self, message: MessageId, label: usize, bits: &[bool]) -> Result<(), SendError>;

    /// Robot index this program addresses as `label`.
    fn recipient_of(&self, label: usize) -> Option<usize>;

    /// Label under which this program addresses `robot`.
    fn label_of(&self, robot: usize) -> Option<usize>;

    fn box_clone(&self) -> Box<dyn Program>;
}

impl Clone for Box<dyn Program> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// One active robot's move during a step.
#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub robot: usize,
    /// Where the robot ended up, in global coordinates.
    pub destination: Point,
    pub events: Vec<Event>,
}

/// Applies one step: every robot in `active` observes `config`, decides,
/// and moves at most `sigma` towards its destination.
pub fn step(
    config: &Configuration,
    specs: &[RobotSpec],
    active: &[usize],
    mut decide: impl FnMut(usize, &View) -> Decision,
) -> Result<(Configuration, Vec<Move>), EngineError> {
    if active.is_empty() {
        return Err(EngineError::EmptyActiveSet(config.time));
    }
    let ids: Option<Vec<u32>> = specs.iter().map(|s| s.visible_id).collect();
    let mut next = config.positions.clone();
    let mut moves = Vec::with_capacity(active.len());
    for &robot in active {
        let spec = specs.get(robot).ok_or(EngineError::UnknownRobot(robot))?;
        let view = View {
            me: robot,
            positions: config.positions.iter().map(|&q| spec.frame.to_local(q)).collect(),
            visible_ids: ids.clone(),
        };
        let decision = decide(robot, &view);
        let target = spec.frame.to_global(decision.destination);
        if !target.is_finite() {
            return Err(EngineError::NonFiniteDestination {
                robot,
                t: config.time,
            });
        }
        let from = config.positions[robot];
        let dist = from.distance(target);
        let reached = if dist <= spec.sigma {
            target
        } else {
            from + (target - from) * (spec.sigma / dist)
        };
        next[robot] = reached;
        moves.push(Move {
            robot,
            destination: reached,
            events: decision.events,
        });
    }
    Ok((
        Configuration {
            time: config.time + 1,
            positions: next,
        },
        moves,
    ))
}

/// A run in progress.
#[derive(Clone)]
pub struct Simulation {
    specs: Vec<RobotSpec>,
    programs: Vec<Box<dyn Program>>,
    scheduler: Scheduler,
    config: Configuration,
    records: Vec<TraceRecord>,
    pending: Vec<Event>,
    meta: RunMeta,
}

impl Simulation {
    /// `meta.robots` is filled with defaults when left empty.
    pub fn new(
        initial: Configuration,
        specs: Vec<RobotSpec>,
        programs: Vec<Box<dyn Program>>,
        schedule: &ActivationSchedule,
        mut meta: RunMeta,
    ) -> Result<Self, EngineError> {
        let n = initial.len();
        if specs.len() != n || programs.len() != n {
            return Err(EngineError::CountMismatch {
                positions: n,
                specs: specs.len(),
                programs: programs.len(),
            });
        }
        for (robot, spec) in specs.iter().enumerate() {
            if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
                return Err(EngineError::InvalidRobot {
                    robot,
                    reason: "sigma must be positive".into(),
                });
            }
            if !spec.frame.is_valid() {
                return Err(EngineError::InvalidRobot {
                    robot,
                    reason: "frame axes must be orthonormal with shared handedness".into(),
                });
            }
            if !initial.positions[robot].is_finite() {
                return Err(EngineError::InvalidRobot {
                    robot,
                    reason: "non-finite position".into(),
                });
            }
        }
        if meta.robots.is_empty() {
            meta.robots = specs
                .iter()
                .map(|s| RobotMeta {
                    sigma: s.sigma,
                    step: None,
                    granular: None,
                    silent: true,
                })
                .collect();
        }
        meta.schedule = schedule.clone();
        meta.synchronous = schedule.is_synchronous();
        meta.fairness_window = schedule.fairness_window();
        Ok(Simulation {
            scheduler: schedule.scheduler(n)?,
            specs,
            programs,
            config: initial,
            records: Vec::new(),
            pending: Vec::new(),
            meta,
        })
    }

    pub fn time(&self) -> usize {
        self.config.time
    }

    pub fn configuration(&self) -> &Configuration {
        &self.config
    }

    pub fn specs(&self) -> &[RobotSpec] {
        &self.specs
    }

    pub fn program(&self, robot: usize) -> &dyn Program {
        self.programs[robot].as_ref()
    }

    pub fn program_mut(&mut self, robot: usize) -> &mut dyn Program {
        self.programs[robot].as_mut()
    }

    pub fn meta(&self) -> &RunMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut RunMeta {
        &mut self.meta
    }

    /// Records an event at the current instant, ahead of the activations.
    pub fn record_event(&mut self, event: Event) {
        self.pending.push(event);
    }

    /// Advances one instant using the schedule's next active set.
    pub fn advance(&mut self) -> Result<(), EngineError> {
        let active = self.scheduler.next_active()?;
        self.advance_with(&active)
    }

    /// Advances one instant with the given active set.
    pub fn advance_with(&mut self, active: &[usize]) -> Result<(), EngineError> {
        let programs = &mut self.programs;
        let (next, moves) = step(&self.config, &self.specs, active, |robot, view| {
            programs[robot].activate(view)
        })?;
        let n = self.config.len();
        let mut destinations = vec![None; n];
        let mut events = std::mem::take(&mut self.pending);
        for m in moves {
            destinations[m.robot] = Some(quantize_point(m.destination));
            events.extend(m.events);
        }
        self.records.push(TraceRecord {
            t: self.config.time,
            active: active.to_vec(),
            positions: self.config.positions.iter().map(|&p| quantize_point(p)).collect(),
            phases: self.programs.iter().map(|p| p.phase()).collect(),
            destinations,
            events,
        });
        self.config = next;
        Ok(())
    }

    pub fn run_until(&mut self, horizon: usize) -> Result<(), EngineError> {
        while self.config.time < horizon {
            self.advance()?;
        }
        Ok(())
    }

    /// Closes the run, appending the final configuration as an idle record.
    pub fn into_trace(mut self) -> Trace {
        let n = self.config.len();
        self.records.push(TraceRecord {
            t: self.config.time,
            active: Vec::new(),
            positions: self.config.positions.iter().map(|&p| quantize_point(p)).collect(),
            phases: self.programs.iter().map(|p| p.phase()).collect(),
            destinations: vec![None; n],
            events: std::mem::take(&mut self.pending),
        });
        self.meta.horizon = self.config.time;
        Trace {
            meta: self.meta,
            records: self.records,
        }
    }
}

/// Runs `horizon` instants from `initial` and returns the trace.
pub fn run(
    initial: Configuration,
    specs: Vec<RobotSpec>,
    programs: Vec<Box<dyn Program>>,
    schedule: &ActivationSchedule,
    horizon: usize,
) -> Result<Trace, EngineError> {
    let meta = RunMeta {
        format: TRACE_FORMAT.to_string(),
        protocol: "custom".to_string(),
        synchronous: false,
        schedule: schedule.clone(),
        fairness_window: None,
        receipt_slack: None,
        emission_slack: None,
        horizon,
        robots: Vec::new(),
    };
    let mut sim = Simulation::new(initial, specs, programs, schedule, meta)?;
    sim.run_until(horizon)?;
    Ok(sim.into_trace())
}
