use crate::geometry::{classify_direction, Granular, Point, Side, EPS};
use crate::model::{Decision, Event, MessageId, Program, SendError, View};

use super::common::{bit_u8, ExcursionTracker, Outbox};

/// Label each robot uses for the other one.
const PEER_LABEL: usize = 1;

/// Reads the other robot's sideways steps.
///
/// A step to the right of the line from the sender towards the observer is
/// a 0, a step to the left is a 1. Steps along that line carry nothing and
/// are reported as faults.
#[derive(Clone, Debug)]
pub struct Sync2Decoder {
    peer_home: Point,
    dial: Granular,
    tracker: ExcursionTracker,
}

impl Sync2Decoder {
    pub fn new(peer_home: Point, observer_home: Point) -> Self {
        let dial = Granular::new(peer_home, peer_home.distance(observer_home), 2, observer_home - peer_home)
            .expect("robots start at distinct positions");
        Sync2Decoder {
            peer_home,
            dial,
            tracker: ExcursionTracker::default(),
        }
    }

    /// Feeds one sighting of the peer. Returns the bit it shows, the first
    /// time a given excursion is seen.
    pub fn observe(&mut self, peer: Point) -> Result<Option<bool>, String> {
        let offset = peer - self.peer_home;
        if offset.norm() <= EPS {
            self.tracker.reset();
            return Ok(None);
        }
        let hit = classify_direction(&self.dial, offset).expect("nonzero offset");
        if hit.label != 1 || hit.deviation > self.dial.max_deviation() / 2.0 {
            self.tracker.reset();
            return Err(format!(
                "move neither left nor right of the line of sight (deviation {:.3} rad from half-diameter {}/{:?})",
                hit.deviation, hit.label, hit.side
            ));
        }
        // Half-diameter 1 on side Zero is a clockwise quarter turn: the right.
        Ok(self.tracker.sighting(hit.label, hit.side).then_some(hit.side == Side::One))
    }
}

/// Two synchronous robots. Even steps carry at most one bit (a sideways
/// step of length `delta`), odd steps bring the robot back home.
#[derive(Clone, Debug)]
pub struct Sync2 {
    me: usize,
    peer: usize,
    home: Point,
    peer_home: Point,
    delta: f64,
    outbox: Outbox,
    activations: usize,
    decoder: Sync2Decoder,
    phase: &'static str,
}

impl Sync2 {
    /// `initial` is the time-zero configuration in this robot's frame and
    /// `sigma` its reach in local units.
    pub fn new(me: usize, initial: &[Point], sigma: f64) -> Self {
        let peer = 1 - me;
        let home = initial[me];
        let peer_home = initial[peer];
        // Half of the granular radius, itself half the separation.
        let delta = sigma.min(home.distance(peer_home) / 4.0);
        Sync2 {
            me,
            peer,
            home,
            peer_home,
            delta,
            outbox: Outbox::default(),
            activations: 0,
            decoder: Sync2Decoder::new(peer_home, home),
            phase: "home",
        }
    }

    pub fn step_length(&self) -> f64 {
        self.delta
    }
}

impl Program for Sync2 {
    fn activate(&mut self, view: &View) -> Decision {
        let mut events = Vec::new();
        match self.decoder.observe(view.positions[self.peer]) {
            Ok(Some(bit)) => events.push(Event::Decoded {
                robot: self.me,
                sender: self.peer,
                recipient: self.me,
                label: PEER_LABEL,
                bit: bit_u8(bit),
            }),
            Ok(None) => {}
            Err(reason) => events.push(Event::DecodeFault {
                robot: self.me,
                sender: self.peer,
                reason,
            }),
        }

        let even = self.activations.is_multiple_of(2);
        self.activations += 1;
        let destination = match self.outbox.front() {
            Some(pending) if even => {
                self.outbox.pop_bit();
                events.push(Event::Encoded {
                    robot: self.me,
                    message: pending.message,
                    index: pending.index,
                    bit: bit_u8(pending.bit),
                });
                let toward_peer = (self.peer_home - self.home)
                    .normalized()
                    .expect("robots start apart");
                let sideways = if pending.bit {
                    self.phase = "bit1";
                    toward_peer.left()
                } else {
                    self.phase = "bit0";
                    toward_peer.right()
                };
                self.home + sideways * self.delta
            }
            _ => {
                self.phase = if even { "home" } else { "return" };
                self.home
            }
        };
        Decision { destination, events }
    }

    fn phase(&self) -> String {
        self.phase.to_string()
    }

    fn enqueue(&mut self, message: MessageId, label: usize, bits: &[bool]) -> Result<(), SendError> {
        match label {
            PEER_LABEL => self.outbox.push(message, label, bits),
            0 => Err(SendError::SelfAddressed),
            other => Err(SendError::UnknownLabel(other)),
        }
    }

    fn recipient_of(&self, label: usize) -> Option<usize> {
        match label {
            0 => Some(self.me),
            PEER_LABEL => Some(self.peer),
            _ => None,
        }
    }

    fn label_of(&self, robot: usize) -> Option<usize> {
        if robot == self.me {
            Some(0)
        } else if robot == self.peer {
            Some(PEER_LABEL)
        } else {
            None
        }
    }

    fn box_clone(&self) -> Box<dyn Program> {
        Box::new(self.clone())
    }
}
