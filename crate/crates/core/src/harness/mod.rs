//! Message-level driving of a protocol run, property monitors over traces,
//! trace files, and exhaustive schedule exploration.

mod explore;
mod messages;
mod monitors;
mod trace_io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{find_duplicate, Point};
use crate::model::{
    ActivationSchedule, Configuration, EngineError, Event, LocalFrame, MessageId, RobotSpec, RunMeta,
    SendError, Simulation, Trace, TRACE_FORMAT,
};
use crate::protocols::{build_programs, robot_meta, Mutations, ProtocolError, ProtocolKind};

pub use explore::{explore_schedules, subset_count, ExploreReport};
pub use messages::{match_decodes, message_records, BitRecord, DecodeMatch, MessageRecord, Mismatch};
pub use monitors::{
    change_window_bound, monitor_suite, observation_log, Evidence, Observation, Verdict, MAX_EVIDENCE,
};
pub use trace_io::{read_trace, write_trace, TraceIoError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("robot {robot}: {source}")]
    Send {
        robot: usize,
        #[source]
        source: SendError,
    },
    #[error("no robot {0}")]
    UnknownRobot(usize),
    #[error("robots {0} and {1} start at the same position")]
    DuplicatePosition(usize, usize),
    #[error("{expected} per-robot values expected, found {found}")]
    CountMismatch { expected: usize, found: usize },
}

/// Instants within which every observer reads a freshly started bit.
///
/// Synchronous observers look at the very next instant. Under a fairness
/// window `B` the observer wakes within `B` instants of the encoding move,
/// and the sender cannot leave that bit before then: its own acknowledgment
/// needs two fresh moves of the observer, the second of which follows a look
/// taken after the encoding move.
pub fn receipt_slack(kind: ProtocolKind, schedule: &ActivationSchedule) -> Option<usize> {
    if kind.is_synchronous() {
        return schedule.is_synchronous().then_some(1);
    }
    match schedule {
        ActivationSchedule::Synchronous => Some(1),
        ActivationSchedule::RandomFair { window, .. } => Some(*window),
        ActivationSchedule::Explicit { .. } => None,
    }
}

/// Longest stretch a robot with queued bits may spend without encoding one.
///
/// Synchronous protocols encode on every other step. Under a window `B`,
/// any phase closed by "everyone moved twice" lasts at most `3B` instants:
/// two windows for the moves and one for the look that sees them. In
/// `async2` the way back to the line retraces at most as many moves as the
/// excursion made, each within `B` instants, so one bit costs at most
/// `3B + 3B·B + 3B`. In `async_n` a phase covers less than `2μ ≤ 2σ`, so a
/// return takes two activations: send, return, resync and return add up to
/// `3B + 2B + 3B + 2B`.
pub fn emission_slack(kind: ProtocolKind, schedule: &ActivationSchedule) -> Option<usize> {
    let window = match schedule {
        ActivationSchedule::Synchronous => 1,
        ActivationSchedule::RandomFair { window, .. } => *window,
        ActivationSchedule::Explicit { .. } => return None,
    };
    match kind {
        ProtocolKind::Sync2 | ProtocolKind::SyncN(_) => schedule.is_synchronous().then_some(2),
        ProtocolKind::Async2 => Some(6 * window + 3 * window * window),
        ProtocolKind::AsyncN(_) => Some(10 * window),
    }
}

/// Per-robot static data. Frames are drawn from `frame_seeds`, with shared
/// axes when the protocol relies on a common North.
pub fn robot_specs(
    kind: ProtocolKind,
    positions: &[Point],
    sigmas: &[f64],
    visible_ids: Option<&[u32]>,
    frame_seeds: &[u64],
) -> Result<Vec<RobotSpec>, HarnessError> {
    let n = positions.len();
    for found in [sigmas.len(), frame_seeds.len(), visible_ids.map_or(n, <[u32]>::len)] {
        if found != n {
            return Err(HarnessError::CountMismatch { expected: n, found });
        }
    }
    Ok((0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(frame_seeds[i]);
            RobotSpec {
                sigma: sigmas[i],
                visible_id: visible_ids.map(|ids| ids[i]),
                frame: LocalFrame::random(&mut rng, positions[i], kind.shared_orientation()),
            }
        })
        .collect())
}

/// A message to hand to a robot at a given instant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedMessage {
    pub sender: usize,
    /// The recipient under the sender's own naming.
    pub label: usize,
    pub bits: Vec<bool>,
    pub at: usize,
}

/// A protocol run driven at the level of messages.
#[derive(Clone)]
pub struct Session {
    kind: ProtocolKind,
    sim: Simulation,
    next_message: MessageId,
}

impl Session {
    pub fn new(
        kind: ProtocolKind,
        initial: Vec<Point>,
        specs: Vec<RobotSpec>,
        schedule: &ActivationSchedule,
        mutations: Mutations,
    ) -> Result<Self, HarnessError> {
        if let Some((i, j)) = find_duplicate(&initial) {
            return Err(HarnessError::DuplicatePosition(i, j));
        }
        let programs = build_programs(kind, &initial, &specs, mutations)?;
        let meta = RunMeta {
            format: TRACE_FORMAT.to_string(),
            protocol: kind.name().to_string(),
            synchronous: schedule.is_synchronous(),
            schedule: schedule.clone(),
            fairness_window: schedule.fairness_window(),
            receipt_slack: receipt_slack(kind, schedule),
            emission_slack: emission_slack(kind, schedule),
            horizon: 0,
            robots: robot_meta(kind, &initial, &specs),
        };
        let sim = Simulation::new(Configuration::initial(initial), specs, programs, schedule, meta)?;
        Ok(Session {
            kind,
            sim,
            next_message: 0,
        })
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn time(&self) -> usize {
        self.sim.time()
    }

    pub fn robots(&self) -> usize {
        self.sim.configuration().len()
    }

    /// Robot that `robot` calls `label`.
    pub fn recipient_of(&self, robot: usize, label: usize) -> Option<usize> {
        (robot < self.robots())
            .then(|| self.sim.program(robot).recipient_of(label))
            .flatten()
    }

    /// Label under which `robot` addresses `target`.
    pub fn label_of(&self, robot: usize, target: usize) -> Option<usize> {
        (robot < self.robots())
            .then(|| self.sim.program(robot).label_of(target))
            .flatten()
    }

    /// Queues `bits` at `robot` for the robot it calls `label`. The message
    /// is recorded in the trace at the current instant.
    pub fn send(&mut self, robot: usize, label: usize, bits: &[bool]) -> Result<MessageId, HarnessError> {
        if robot >= self.robots() {
            return Err(HarnessError::UnknownRobot(robot));
        }
        let id = self.next_message;
        self.sim
            .program_mut(robot)
            .enqueue(id, label, bits)
            .map_err(|source| HarnessError::Send { robot, source })?;
        let recipient = self
            .sim
            .program(robot)
            .recipient_of(label)
            .expect("enqueue accepted the label");
        self.next_message += 1;
        self.sim.meta_mut().robots[robot].silent = false;
        self.sim.record_event(Event::Enqueued {
            robot,
            message: id,
            label,
            recipient,
            bits: bits.iter().map(|&b| u8::from(b)).collect(),
        });
        Ok(id)
    }

    /// Sends to a robot by index rather than label.
    pub fn send_to(&mut self, robot: usize, target: usize, bits: &[bool]) -> Result<MessageId, HarnessError> {
        let label = self
            .label_of(robot, target)
            .ok_or(HarnessError::UnknownRobot(target))?;
        self.send(robot, label, bits)
    }

    pub fn advance(&mut self) -> Result<(), HarnessError> {
        Ok(self.sim.advance()?)
    }

    pub fn advance_with(&mut self, active: &[usize]) -> Result<(), HarnessError> {
        Ok(self.sim.advance_with(active)?)
    }

    /// Advances to `horizon`, handing over each scripted message at its
    /// instant (messages due earlier are sent at once).
    pub fn run_script(&mut self, script: &[ScriptedMessage], horizon: usize) -> Result<(), HarnessError> {
        let mut order: Vec<&ScriptedMessage> = script.iter().collect();
        order.sort_by_key(|m| m.at);
        let mut next = order.into_iter().peekable();
        loop {
            while let Some(m) = next.next_if(|m| m.at <= self.time()) {
                self.send(m.sender, m.label, &m.bits)?;
            }
            if self.time() >= horizon {
                return Ok(());
            }
            self.advance()?;
        }
    }

    pub fn into_trace(self) -> Trace {
        self.sim.into_trace()
    }
}
