use crate::geometry::{classify_direction, slice_direction, Point, EPS};
use crate::model::{Decision, Event, MessageId, Program, SendError, View};

use super::common::{bit_u8, ExcursionTracker, Outbox};
use super::RobotLayout;

/// Any number of synchronous robots.
///
/// Every robot owns a granular sliced by `n` diameters, one per robot label.
/// To send bit `b` to the robot it calls `k`, a robot steps from its center
/// along diameter `k` (side `b`) on an even step and returns on the next
/// odd step. Every robot reads every move, so each one can reconstruct all
/// traffic, not just what is addressed to it.
#[derive(Clone, Debug)]
pub struct SyncN {
    me: usize,
    /// Every robot's granular and naming, in this robot's frame.
    layout: Vec<RobotLayout>,
    delta: f64,
    outbox: Outbox,
    activations: usize,
    trackers: Vec<ExcursionTracker>,
    phase: String,
}

impl SyncN {
    pub fn new(me: usize, layout: Vec<RobotLayout>, sigma: f64) -> Self {
        let delta = sigma.min(layout[me].granular.radius / 2.0);
        let n = layout.len();
        SyncN {
            me,
            layout,
            delta,
            outbox: Outbox::default(),
            activations: 0,
            trackers: vec![ExcursionTracker::default(); n],
            phase: "center".into(),
        }
    }

    pub fn layout(&self) -> &[RobotLayout] {
        &self.layout
    }

    pub fn step_length(&self) -> f64 {
        self.delta
    }

    /// Reads every other robot's current offset from its center.
    pub fn decode(&mut self, positions: &[Point], events: &mut Vec<Event>) {
        for sender in 0..positions.len() {
            if sender == self.me {
                continue;
            }
            let granular = &self.layout[sender].granular;
            let offset = positions[sender] - granular.center;
            if offset.norm() <= EPS {
                self.trackers[sender].reset();
                continue;
            }
            let hit = classify_direction(granular, offset).expect("nonzero offset");
            if hit.deviation > granular.max_deviation() / 2.0 {
                events.push(Event::DecodeFault {
                    robot: self.me,
                    sender,
                    reason: format!("move {:.3} rad off every diameter", hit.deviation),
                });
                continue;
            }
            if !self.trackers[sender].sighting(hit.label, hit.side) {
                continue;
            }
            let naming = &self.layout[sender].naming;
            match naming.robot_with(hit.label) {
                Some(recipient) if recipient != sender => events.push(Event::Decoded {
                    robot: self.me,
                    sender,
                    recipient,
                    label: hit.label,
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

impl Program for SyncN {
    fn activate(&mut self, view: &View) -> Decision {
        let mut events = Vec::new();
        self.decode(&view.positions, &mut events);

        let even = self.activations.is_multiple_of(2);
        self.activations += 1;
        let own = self.layout[self.me].granular;
        let destination = match self.outbox.front() {
            Some(pending) if even => {
                self.outbox.pop_bit();
                events.push(Event::Encoded {
                    robot: self.me,
                    message: pending.message,
                    index: pending.index,
                    bit: bit_u8(pending.bit),
                });
                self.phase = format!("send:{}/{}", pending.label, bit_u8(pending.bit));
                let dir = slice_direction(&own, pending.label, pending.side())
                    .expect("labels are validated on enqueue");
                own.center + dir * self.delta
            }
            _ => {
                self.phase = if even { "center" } else { "return" }.into();
                own.center
            }
        };
        Decision { destination, events }
    }

    fn phase(&self) -> String {
        self.phase.clone()
    }

    fn enqueue(&mut self, message: MessageId, label: usize, bits: &[bool]) -> Result<(), SendError> {
        let naming = &self.layout[self.me].naming;
        match naming.robot_with(label) {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Side, Vector};
    use crate::protocols::{preprocess, NamingMode};

    fn square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(0.0, 10.0),
            Point::new(10.0, 11.0),
        ]
    }

    fn robot(me: usize) -> SyncN {
        let layout = preprocess(&square(), NamingMode::SenseOfDirection, None, false).unwrap();
        SyncN::new(me, layout, 100.0)
    }

    fn view(me: usize, positions: &[Point]) -> View {
        View {
            me,
            positions: positions.to_vec(),
            visible_ids: None,
        }
    }

    #[test]
    fn bit_moves_along_recipient_diameter() {
        let mut r = robot(0);
        // Shared-axes order: (0,0)=0, (0,10)=1, (10,0)=2, (10,11)=3.
        let label = r.label_of(3).unwrap();
        assert_eq!(label, 3);
        r.enqueue(7, label, &[true]).unwrap();
        let d = r.activate(&view(0, &square()));
        let own = r.layout()[0].granular;
        let expected = own.center + slice_direction(&own, 3, Side::One).unwrap() * (own.radius / 2.0);
        assert!(d.destination.distance(expected) < 1e-12);
        assert!(own.strictly_contains(d.destination));
    }

    #[test]
    fn idle_robot_never_moves() {
        let mut r = robot(2);
        for _ in 0..6 {
            assert_eq!(r.activate(&view(2, &square())).destination, square()[2]);
        }
    }

    #[test]
    fn observer_reads_sender_and_recipient() {
        let mut sender = robot(1);
        let mut observer = robot(3);
        sender.enqueue(0, sender.label_of(3).unwrap(), &[false]).unwrap();
        let d = sender.activate(&view(1, &square()));
        let mut positions = square();
        positions[1] = d.destination;
        let out = observer.activate(&view(3, &positions));
        let decoded: Vec<_> = out
            .events
            .iter()
            .filter(|e| matches!(e, Event::Decoded { .. }))
            .collect();
        assert_eq!(
            decoded,
            vec![&Event::Decoded {
                robot: 3,
                sender: 1,
                recipient: 3,
                label: 3,
                bit: 0
            }]
        );
    }

    #[test]
    fn enqueue_validation() {
        let mut r = robot(0);
        assert_eq!(r.enqueue(0, 0, &[true]), Err(SendError::SelfAddressed));
        assert_eq!(r.enqueue(0, 4, &[true]), Err(SendError::UnknownLabel(4)));
    }

    #[test]
    fn off_diameter_move_is_a_fault() {
        let mut observer = robot(0);
        let mut positions = square();
        let g = observer.layout()[1].granular;
        let between = slice_direction(&g, 0, Side::Zero).unwrap().rotated_clockwise(std::f64::consts::PI / 8.0);
        positions[1] = g.center + Vector::new(between.x, between.y) * 0.5;
        let out = observer.activate(&view(0, &positions));
        assert!(out.events.iter().any(|e| matches!(e, Event::DecodeFault { sender: 1, .. })));
    }
}
