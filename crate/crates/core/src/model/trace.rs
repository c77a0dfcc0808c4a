use serde::{Deserialize, Serialize};

use crate::geometry::{Circle, Point};

use super::ActivationSchedule;

/// Identifier of an enqueued message, unique within a run.
pub type MessageId = usize;

/// Something a robot did or learned during one activation, or a message
/// handed to it by the harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    /// A message was queued at `robot` for the robot it calls `label`.
    Enqueued {
        robot: usize,
        message: MessageId,
        label: usize,
        recipient: usize,
        bits: Vec<u8>,
    },
    /// `robot` started the movement that encodes one bit.
    Encoded {
        robot: usize,
        message: MessageId,
        index: usize,
        bit: u8,
    },
    /// `robot` learned that every robot it waits on has seen that bit.
    Acked {
        robot: usize,
        message: MessageId,
        index: usize,
    },
    /// Observer `robot` read a bit sent by `sender` to `recipient`.
    Decoded {
        robot: usize,
        sender: usize,
        recipient: usize,
        label: usize,
        bit: u8,
    },
    /// Observer `robot` saw a movement of `sender` it could not read.
    DecodeFault {
        robot: usize,
        sender: usize,
        reason: String,
    },
}

impl Event {
    pub fn robot(&self) -> usize {
        match self {
            Event::Enqueued { robot, .. }
            | Event::Encoded { robot, .. }
            | Event::Acked { robot, .. }
            | Event::Decoded { robot, .. }
            | Event::DecodeFault { robot, .. } => *robot,
        }
    }
}

/// Static per-robot data the monitors need, in global units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotMeta {
    pub sigma: f64,
    /// Length of the first move of a decaying phase, if the protocol uses one.
    pub step: Option<f64>,
    /// Movement disc the robot must stay inside, if the protocol confines it.
    pub granular: Option<Circle>,
    /// True when the robot never had anything to send.
    pub silent: bool,
}

/// Run-level header of a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub format: String,
    pub protocol: String,
    pub synchronous: bool,
    pub schedule: ActivationSchedule,
    /// Every robot is active at least once in any window of this many instants.
    pub fairness_window: Option<usize>,
    /// Instants after an encode within which the addressee must have decoded
    /// it; `None` when the schedule gives no such guarantee.
    pub receipt_slack: Option<usize>,
    /// Longest a robot with queued bits may go without starting a new one.
    pub emission_slack: Option<usize>,
    pub horizon: usize,
    pub robots: Vec<RobotMeta>,
}

pub const TRACE_FORMAT: &str = "stigmergy-trace/1";

/// State at instant `t` and what happened during the step that follows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub active: Vec<usize>,
    pub positions: Vec<Point>,
    pub phases: Vec<String>,
    /// Global destination chosen by each active robot, clamped to its reach.
    pub destinations: Vec<Option<Point>>,
    pub events: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub meta: RunMeta,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn robots(&self) -> usize {
        self.meta.robots.len()
    }

    pub fn last_instant(&self) -> usize {
        self.records.last().map_or(0, |r| r.t)
    }

    pub fn events(&self) -> impl Iterator<Item = (usize, &Event)> {
        self.records
            .iter()
            .flat_map(|r| r.events.iter().map(move |e| (r.t, e)))
    }
}

/// Rounds to 12 significant digits, the precision traces are stored at.
pub fn quantize(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn quantize_point(p: Point) -> Point {
    Point::new(quantize(p.x), quantize(p.y))
}
