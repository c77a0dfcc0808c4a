use std::collections::VecDeque;

use crate::geometry::{Point, Side, Vector, EPS};
use crate::model::{MessageId, SendError};

/// One bit waiting at the head of an outbox.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PendingBit {
    pub message: MessageId,
    pub index: usize,
    pub label: usize,
    pub bit: bool,
}

impl PendingBit {
    pub fn side(&self) -> Side {
        Side::from_bit(self.bit)
    }
}

#[derive(Clone, Debug)]
struct OutMessage {
    id: MessageId,
    label: usize,
    bits: Vec<bool>,
}

/// Messages waiting to be signalled, sent bit by bit in enqueue order.
#[derive(Clone, Debug, Default)]
pub struct Outbox {
    queue: VecDeque<OutMessage>,
    next_bit: usize,
}

impl Outbox {
    pub fn push(&mut self, id: MessageId, label: usize, bits: &[bool]) -> Result<(), SendError> {
        if bits.is_empty() {
            return Err(SendError::Empty);
        }
        self.queue.push_back(OutMessage {
            id,
            label,
            bits: bits.to_vec(),
        });
        Ok(())
    }

    pub fn front(&self) -> Option<PendingBit> {
        self.queue.front().map(|m| PendingBit {
            message: m.id,
            index: self.next_bit,
            label: m.label,
            bit: m.bits[self.next_bit],
        })
    }

    /// Drops the bit returned by [`Outbox::front`].
    pub fn pop_bit(&mut self) {
        if let Some(m) = self.queue.front() {
            self.next_bit += 1;
            if self.next_bit == m.bits.len() {
                self.queue.pop_front();
                self.next_bit = 0;
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Bits still to be sent.
    pub fn len(&self) -> usize {
        self.queue.iter().map(|m| m.bits.len()).sum::<usize>() - self.next_bit
    }
}

/// What one robot has seen of another across its own activations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeerRecord {
    pub last_seen: Option<Point>,
    /// Number of activations at which the peer was found somewhere new.
    pub changes: u64,
    pub last_direction: Option<Vector>,
}

/// Position-change bookkeeping for every other robot.
///
/// At most one change is counted per peer per own activation: the peer's
/// current position is compared with where it was at the previous
/// activation, whatever happened in between.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeerObservationLog {
    peers: Vec<PeerRecord>,
}

impl PeerObservationLog {
    pub fn new(robots: usize) -> Self {
        PeerObservationLog {
            peers: vec![PeerRecord::default(); robots],
        }
    }

    pub fn observe(&mut self, positions: &[Point], me: usize) {
        for (robot, (record, &p)) in self.peers.iter_mut().zip(positions).enumerate() {
            if robot == me {
                continue;
            }
            if let Some(last) = record.last_seen {
                if last.distance(p) > EPS {
                    record.changes += 1;
                    record.last_direction = (p - last).normalized();
                }
            }
            record.last_seen = Some(p);
        }
    }

    pub fn changes(&self, robot: usize) -> u64 {
        self.peers[robot].changes
    }

    pub fn record(&self, robot: usize) -> &PeerRecord {
        &self.peers[robot]
    }

    pub fn snapshot(&self) -> Vec<u64> {
        self.peers.iter().map(|p| p.changes).collect()
    }

    /// Every robot other than `me` moved at least twice since `baseline`.
    pub fn all_changed_twice(&self, baseline: &[u64], me: usize) -> bool {
        self.peers
            .iter()
            .enumerate()
            .all(|(r, p)| r == me || p.changes >= baseline[r] + 2)
    }
}

/// Splits a sender's observed positions into excursions so that each one is
/// read exactly once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExcursionTracker {
    current: Option<(usize, Side)>,
}

impl ExcursionTracker {
    /// The sender was seen back on its idle line.
    pub fn reset(&mut self) {
        self.current = None;
    }

    /// The sender was seen on half-diameter `(label, side)`; true when this
    /// starts a new excursion.
    pub fn sighting(&mut self, label: usize, side: Side) -> bool {
        let fresh = self.current != Some((label, side));
        self.current = Some((label, side));
        fresh
    }
}

pub fn bit_u8(bit: bool) -> u8 {
    u8::from(bit)
}
