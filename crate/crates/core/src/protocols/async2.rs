use crate::geometry::{Point, Vector, EPS};
use crate::model::{Decision, Event, MessageId, Program, SendError, View};

use super::common::{bit_u8, Outbox, PeerObservationLog, PendingBit};
use super::Mutations;

const PEER_LABEL: usize = 1;

/// Phases of [`Async2`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Async2Phase {
    /// Walking away from the peer along the horizon line. `synced` turns on
    /// once the peer has been seen moving twice, after which bits may start.
    IdleNorth { synced: bool },
    /// Stepping off the line, east for 0 and west for 1, until the peer has
    /// been seen moving twice.
    SendBit(PendingBit),
    /// Retracing to the point where the line was left.
    ReturnToH,
    /// Walking away along the line again until the peer has moved twice, so
    /// the next excursion cannot be mistaken for this one.
    Resync,
}

/// The line through both robots, fixed at a robot's first activation.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Horizon {
    /// Away from the peer.
    north: Vector,
    /// Where the peer was first seen; a point on the line.
    anchor: Point,
}

/// Reads the peer's excursions off the horizon line.
///
/// The peer's north points away from the observer, so its east is the
/// observer's west.
#[derive(Clone, Debug)]
pub struct Async2Decoder {
    anchor: Point,
    peer_north: Vector,
    peer_east: Vector,
    /// Side and along-line coordinate of the excursion in progress.
    current: Option<(bool, f64)>,
}

impl Async2Decoder {
    /// `peer` and `observer` are both on the horizon line.
    pub fn new(peer: Point, observer: Point) -> Self {
        let peer_north = (peer - observer).normalized().expect("robots never coincide");
        Async2Decoder {
            anchor: peer,
            peer_north,
            peer_east: peer_north.right(),
            current: None,
        }
    }

    /// Feeds one sighting; returns the bit of a newly seen excursion.
    pub fn observe(&mut self, peer: Point) -> Result<Option<bool>, String> {
        let offset = peer - self.anchor;
        let tol = EPS * (1.0 + offset.norm());
        let lateral = offset.dot(self.peer_east);
        let along = offset.dot(self.peer_north);
        if lateral.abs() <= tol {
            self.current = None;
            return Ok(None);
        }
        let bit = lateral < 0.0;
        match self.current {
            Some((side, at)) if side == bit => {
                if (along - at).abs() > tol.max(EPS * (1.0 + at.abs())) {
                    return Err(format!(
                        "excursion drifted {:.3e} along the horizon line",
                        along - at
                    ));
                }
                Ok(None)
            }
            _ => {
                self.current = Some((bit, along));
                Ok(Some(bit))
            }
        }
    }
}

/// Two robots under any fair schedule.
///
/// Acknowledgment is implicit: a robot that keeps moving the same way and
/// then sees its peer change position twice knows the peer has seen it move
/// at least once.
#[derive(Clone, Debug)]
pub struct Async2 {
    me: usize,
    peer: usize,
    step: f64,
    outbox: Outbox,
    phase: Async2Phase,
    phase_count: u64,
    horizon: Option<Horizon>,
    decoder: Option<Async2Decoder>,
    log: PeerObservationLog,
    baseline: u64,
    departure: Point,
    mutations: Mutations,
}

impl Async2 {
    pub fn new(me: usize, initial: &[Point], sigma: f64, mutations: Mutations) -> Self {
        let peer = 1 - me;
        let step = sigma.min(initial[me].distance(initial[peer]) / 4.0);
        Async2 {
            me,
            peer,
            step,
            outbox: Outbox::default(),
            phase: Async2Phase::IdleNorth { synced: false },
            phase_count: 0,
            horizon: None,
            decoder: None,
            log: PeerObservationLog::new(2),
            baseline: 0,
            departure: initial[me],
            mutations,
        }
    }

    pub fn current_phase(&self) -> Async2Phase {
        self.phase
    }

    pub fn step_length(&self) -> f64 {
        self.step
    }

    fn enter(&mut self, phase: Async2Phase) {
        self.phase = phase;
        self.phase_count += 1;
        self.baseline = self.log.changes(self.peer);
    }

    fn peer_moved_twice(&self) -> bool {
        self.log.changes(self.peer) >= self.baseline + 2
    }

    fn start_bit(&mut self, pending: PendingBit, here: Point, events: &mut Vec<Event>) {
        self.departure = here;
        events.push(Event::Encoded {
            robot: self.me,
            message: pending.message,
            index: pending.index,
            bit: bit_u8(pending.bit),
        });
        self.enter(Async2Phase::SendBit(pending));
    }

    /// Applies every phase change due at this activation.
    fn transition(&mut self, here: Point, events: &mut Vec<Event>) {
        loop {
            match self.phase {
                Async2Phase::IdleNorth { synced } => {
                    let synced = synced || self.peer_moved_twice();
                    if !synced {
                        return;
                    }
                    match self.outbox.front() {
                        Some(pending) => self.start_bit(pending, here, events),
                        None => {
                            self.phase = Async2Phase::IdleNorth { synced };
                            return;
                        }
                    }
                }
                Async2Phase::SendBit(pending) => {
                    if !self.peer_moved_twice() {
                        return;
                    }
                    self.outbox.pop_bit();
                    events.push(Event::Acked {
                        robot: self.me,
                        message: pending.message,
                        index: pending.index,
                    });
                    self.enter(Async2Phase::ReturnToH);
                }
                Async2Phase::ReturnToH => {
                    if here.distance(self.departure) > EPS {
                        return;
                    }
                    if self.mutations.skip_resync {
                        self.enter(Async2Phase::IdleNorth { synced: true });
                    } else {
                        self.enter(Async2Phase::Resync);
                        return;
                    }
                }
                Async2Phase::Resync => {
                    if !self.peer_moved_twice() {
                        return;
                    }
                    self.enter(Async2Phase::IdleNorth { synced: true });
                }
            }
        }
    }
}

impl Program for Async2 {
    fn activate(&mut self, view: &View) -> Decision {
        let here = view.positions[self.me];
        let there = view.positions[self.peer];
        let horizon = *self.horizon.get_or_insert_with(|| Horizon {
            north: (here - there).normalized().expect("robots never coincide"),
            anchor: there,
        });
        let decoder = self
            .decoder
            .get_or_insert_with(|| Async2Decoder::new(horizon.anchor, here));

        let mut events = Vec::new();
        match decoder.observe(there) {
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
        self.log.observe(&view.positions, self.me);
        self.transition(here, &mut events);

        let destination = match self.phase {
            Async2Phase::IdleNorth { .. } | Async2Phase::Resync => here + horizon.north * self.step,
            Async2Phase::SendBit(pending) => {
                let east = horizon.north.right();
                let side = if pending.bit { -east } else { east };
                here + side * self.step
            }
            Async2Phase::ReturnToH => self.departure,
        };
        Decision { destination, events }
    }

    fn phase(&self) -> String {
        let name = match self.phase {
            Async2Phase::IdleNorth { synced: false } => "north".to_string(),
            Async2Phase::IdleNorth { synced: true } => "idle".to_string(),
            Async2Phase::SendBit(p) => format!("send:{}", bit_u8(p.bit)),
            Async2Phase::ReturnToH => "return".to_string(),
            Async2Phase::Resync => "resync".to_string(),
        };
        format!("{name}#{}", self.phase_count)
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

#[cfg(test)]
mod tests {
    use super::*;

    fn view(me: usize, positions: &[Point]) -> View {
        View {
            me,
            positions: positions.to_vec(),
            visible_ids: None,
        }
    }

    #[test]
    fn without_acknowledgment_the_robot_walks_north_forever() {
        let initial = [Point::new(0.0, 0.0), Point::new(0.0, 4.0)];
        let mut r = Async2::new(0, &initial, 0.5, Mutations::default());
        r.enqueue(0, 1, &[true]).unwrap();
        let mut here = initial[0];
        for _ in 0..20 {
            let d = r.activate(&view(0, &[here, initial[1]]));
            assert!(d.destination.y < here.y);
            assert!((d.destination.x - here.x).abs() < 1e-12);
            here = d.destination;
        }
        assert!(matches!(r.current_phase(), Async2Phase::IdleNorth { synced: false }));
    }

    #[test]
    fn decoder_reads_excursions_once() {
        let peer = Point::new(0.0, 10.0);
        let me = Point::new(0.0, 0.0);
        // Peer's north is +y, its east is +x.
        let mut dec = Async2Decoder::new(peer, me);
        assert_eq!(dec.observe(Point::new(0.0, 11.0)), Ok(None));
        assert_eq!(dec.observe(Point::new(1.0, 11.0)), Ok(Some(false)));
        assert_eq!(dec.observe(Point::new(2.0, 11.0)), Ok(None));
        assert_eq!(dec.observe(Point::new(0.0, 11.0)), Ok(None));
        assert_eq!(dec.observe(Point::new(0.0, 12.0)), Ok(None));
        assert_eq!(dec.observe(Point::new(1.0, 12.0)), Ok(Some(false)));
        assert_eq!(dec.observe(Point::new(0.0, 13.0)), Ok(None));
        assert_eq!(dec.observe(Point::new(-1.0, 13.0)), Ok(Some(true)));
    }

    #[test]
    fn decoder_on_line_only_is_silent() {
        let mut dec = Async2Decoder::new(Point::new(3.0, 3.0), Point::new(0.0, 0.0));
        for k in 0..10 {
            assert_eq!(dec.observe(Point::new(3.0 + k as f64, 3.0 + k as f64)), Ok(None));
        }
    }

    #[test]
    fn decoder_flags_drift_inside_an_excursion() {
        let mut dec = Async2Decoder::new(Point::new(0.0, 10.0), Point::new(0.0, 0.0));
        assert_eq!(dec.observe(Point::new(1.0, 11.0)), Ok(Some(false)));
        assert!(dec.observe(Point::new(1.0, 12.0)).is_err());
    }

    #[test]
    fn every_activation_moves() {
        let initial = [Point::new(0.0, 0.0), Point::new(4.0, 0.0)];
        let mut a = Async2::new(0, &initial, 1.0, Mutations::default());
        a.enqueue(0, 1, &[false, false]).unwrap();
        // Peer moving away one unit per look keeps acknowledging.
        let mut here = initial[0];
        for k in 0..40 {
            let peer = Point::new(4.0 + k as f64, 0.0);
            let d = a.activate(&view(0, &[here, peer]));
            assert!(d.destination.distance(here) > 0.0, "activation {k}");
            // Reach is one unit, as the engine would clamp.
            let v = d.destination - here;
            here = if v.norm() > 1.0 { here + v * (1.0 / v.norm()) } else { d.destination };
        }
    }
}
