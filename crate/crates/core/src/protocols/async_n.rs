use crate::geometry::{classify_direction, slice_direction, Point, Side, Vector, EPS};
use crate::model::{Decision, Event, MessageId, Program, SendError, View};

use super::common::{bit_u8, ExcursionTracker, Outbox, PeerObservationLog, PendingBit};
use super::RobotLayout;

/// Diameter reserved for idling. Recipient label `k` uses diameter `k + 1`.
const IDLE_DIAMETER: usize = 0;

/// Each move in a decaying phase is this many times shorter than the last.
pub const DECAY: f64 = 2.0;

/// Length of the first move of a decaying phase, for a robot of reach
/// `sigma` whose granular has radius `radius`.
pub fn initial_step(sigma: f64, radius: f64) -> f64 {
    sigma.min(radius / 4.0)
}

/// Phases of [`AsyncN`]. All but `ReturnToCenter` end once every other
/// robot has been seen moving twice since the phase began.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AsyncNPhase {
    /// Nothing to send: drift along the idle half-diameter, turning around
    /// each time everyone has been seen moving twice.
    OscillateKappa(Heading),
    /// Drift out along the recipient's diameter.
    SendBit(PendingBit),
    /// Head straight back to the center, then go on with `then`.
    ReturnToCenter(AfterReturn),
    /// Drift along the idle diameter after a bit, so the next excursion is
    /// told apart from this one.
    ResyncKappa(Heading),
}

/// Direction of travel on the idle half-diameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Heading {
    Out,
    In,
}

impl Heading {
    fn turned(self) -> Heading {
        match self {
            Heading::Out => Heading::In,
            Heading::In => Heading::Out,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AfterReturn {
    Send(PendingBit),
    Resync,
}

/// Any number of robots under any fair schedule.
///
/// The granular gets one extra diameter, the idle line. A robot with nothing
/// to say drifts on it; a bit is an excursion along the recipient's diameter
/// held until everyone has been seen moving twice, followed by a return to
/// the center and a drift on the idle line held by the same rule. Moves in
/// a phase shrink geometrically so the robot never reaches its border.
#[derive(Clone, Debug)]
pub struct AsyncN {
    me: usize,
    layout: Vec<RobotLayout>,
    step: f64,
    outbox: Outbox,
    phase: AsyncNPhase,
    phase_count: u64,
    moves_in_phase: i32,
    log: PeerObservationLog,
    baseline: Vec<u64>,
    trackers: Vec<ExcursionTracker>,
}

impl AsyncN {
    pub fn new(me: usize, layout: Vec<RobotLayout>, sigma: f64) -> Self {
        let n = layout.len();
        let step = initial_step(sigma, layout[me].granular.radius);
        AsyncN {
            me,
            layout,
            step,
            outbox: Outbox::default(),
            phase: AsyncNPhase::OscillateKappa(Heading::Out),
            phase_count: 0,
            moves_in_phase: 0,
            log: PeerObservationLog::new(n),
            baseline: vec![0; n],
            trackers: vec![ExcursionTracker::default(); n],
        }
    }

    pub fn current_phase(&self) -> AsyncNPhase {
        self.phase
    }

    pub fn step_length(&self) -> f64 {
        self.step
    }

    pub fn layout(&self) -> &[RobotLayout] {
        &self.layout
    }

    fn enter(&mut self, phase: AsyncNPhase) {
        self.phase = phase;
        self.phase_count += 1;
        self.moves_in_phase = 0;
        self.baseline = self.log.snapshot();
    }

    fn everyone_moved_twice(&self) -> bool {
        self.log.all_changed_twice(&self.baseline, self.me)
    }

    fn next_after_idle(&mut self, turned: Heading) {
        match self.outbox.front() {
            Some(pending) => self.enter(AsyncNPhase::ReturnToCenter(AfterReturn::Send(pending))),
            None => self.enter(AsyncNPhase::OscillateKappa(turned)),
        }
    }

    fn transition(&mut self, here: Point, events: &mut Vec<Event>) {
        let center = self.layout[self.me].granular.center;
        loop {
            match self.phase {
                AsyncNPhase::OscillateKappa(heading) | AsyncNPhase::ResyncKappa(heading) => {
                    if !self.everyone_moved_twice() {
                        return;
                    }
                    self.next_after_idle(heading.turned());
                }
                AsyncNPhase::SendBit(pending) => {
                    if !self.everyone_moved_twice() {
                        return;
                    }
                    self.outbox.pop_bit();
                    events.push(Event::Acked {
                        robot: self.me,
                        message: pending.message,
                        index: pending.index,
                    });
                    self.enter(AsyncNPhase::ReturnToCenter(AfterReturn::Resync));
                }
                AsyncNPhase::ReturnToCenter(then) => {
                    if here.distance(center) > EPS {
                        return;
                    }
                    match then {
                        AfterReturn::Send(pending) => {
                            events.push(Event::Encoded {
                                robot: self.me,
                                message: pending.message,
                                index: pending.index,
                                bit: bit_u8(pending.bit),
                            });
                            self.enter(AsyncNPhase::SendBit(pending));
                        }
                        AfterReturn::Resync => self.enter(AsyncNPhase::ResyncKappa(Heading::Out)),
                    }
                    return;
                }
            }
        }
    }

    /// Next point on the half-diameter `dir`, moving out (or back in when
    /// `inward`). Each move shrinks by [`DECAY`] and covers at most half of
    /// what is left before `limit`, a distance from the center.
    fn drift(&mut self, here: Point, dir: Vector, limit: f64, inward: bool) -> Point {
        let center = self.layout[self.me].granular.center;
        let travelled = (here - center).dot(dir);
        let room = if inward { travelled - limit } else { limit - travelled }.max(0.0);
        let length = (self.step / DECAY.powi(self.moves_in_phase)).min(room / 2.0);
        self.moves_in_phase += 1;
        let dir = if inward { -dir } else { dir };
        here + dir * length
    }

    /// Reads every other robot's position relative to its granular.
    pub fn decode(&mut self, positions: &[Point], events: &mut Vec<Event>) {
        for sender in 0..positions.len() {
            if sender == self.me {
                continue;
            }
            let granular = &self.layout[sender].granular;
            let offset = positions[sender] - granular.center;
            if offset.norm() <= EPS {
                continue;
            }
            let hit = classify_direction(granular, offset).expect("nonzero offset");
            if hit.deviation > granular.max_deviation() / 2.0 {
                events.push(Event::DecodeFault {
                    robot: self.me,
                    sender,
                    reason: format!("position {:.3} rad off every diameter", hit.deviation),
                });
                continue;
            }
            if hit.label == IDLE_DIAMETER {
                self.trackers[sender].reset();
                continue;
            }
            if !self.trackers[sender].sighting(hit.label, hit.side) {
                continue;
            }
            let label = hit.label - 1;
            match self.layout[sender].naming.robot_with(label) {
                Some(recipient) if recipient != sender => events.push(Event::Decoded {
                    robot: self.me,
                    sender,
                    recipient,
                    label,
                    bit: bit_u8(hit.side.bit()),
                }),
                _ => events.push(Event::DecodeFault {
                    robot: self.me,
                    sender,
                    reason: format!("diameter {} does not address another robot", hit.label),
                }),
            }
        }
    }
}

impl Program for AsyncN {
    fn activate(&mut self, view: &View) -> Decision {
        let here = view.positions[self.me];
        let mut events = Vec::new();
        self.decode(&view.positions, &mut events);
        self.log.observe(&view.positions, self.me);
        self.transition(here, &mut events);

        let own = self.layout[self.me].granular;
        let destination = match self.phase {
            AsyncNPhase::OscillateKappa(heading) | AsyncNPhase::ResyncKappa(heading) => {
                let dir = slice_direction(&own, IDLE_DIAMETER, Side::Zero).expect("idle diameter exists");
                match heading {
                    Heading::Out => self.drift(here, dir, own.radius / 2.0, false),
                    Heading::In => self.drift(here, dir, self.step / 2.0, true),
                }
            }
            AsyncNPhase::SendBit(pending) => {
                let dir = slice_direction(&own, pending.label + 1, pending.side())
                    .expect("labels are validated on enqueue");
                self.drift(here, dir, own.radius, false)
            }
            AsyncNPhase::ReturnToCenter(_) => own.center,
        };
        Decision { destination, events }
    }

    fn phase(&self) -> String {
        let name = match self.phase {
            AsyncNPhase::OscillateKappa(Heading::Out) => "kappa-out".to_string(),
            AsyncNPhase::OscillateKappa(Heading::In) => "kappa-in".to_string(),
            AsyncNPhase::ResyncKappa(Heading::Out) => "resync-out".to_string(),
            AsyncNPhase::ResyncKappa(Heading::In) => "resync-in".to_string(),
            AsyncNPhase::SendBit(p) => format!("send:{}/{}", p.label, bit_u8(p.bit)),
            AsyncNPhase::ReturnToCenter(_) => "return".to_string(),
        };
        format!("{name}#{}", self.phase_count)
    }

    fn enqueue(&mut self, message: MessageId, label: usize, bits: &[bool]) -> Result<(), SendError> {
        match self.layout[self.me].naming.robot_with(label) {
            None => Err(SendError::UnknownLabel(label)),
            Some(r) if r == self.me => Err(SendError::SelfAddressed),
            Some(_) => self.outbox.push(message, label, bits),
        }
    }

    fn recipient_of(&self, label: usize) -> Option<usize> {
        self.layout[self.me].naming.robot_with(label)
    }

    fn label_of(&self, robot: usize) -> Option<usize> {
        (robot < self.layout.len()).then(|| self.layout[self.me].naming.label_of(robot))
    }

    fn box_clone(&self) -> Box<dyn Program> {
        Box::new(self.clone())
    }
}
