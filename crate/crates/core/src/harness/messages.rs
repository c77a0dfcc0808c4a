use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Event, MessageId, Trace};

/// Life of one bit of a message.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitRecord {
    pub bit: u8,
    pub encoded_at: Option<usize>,
    pub acked_at: Option<usize>,
    /// Observer to the instant it read this bit.
    pub decoded_at: BTreeMap<usize, usize>,
}

/// Life of one message, rebuilt from a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub id: MessageId,
    pub sender: usize,
    /// Recipient under the sender's naming.
    pub label: usize,
    pub recipient: usize,
    pub enqueued_at: usize,
    pub bits: Vec<BitRecord>,
}

impl MessageRecord {
    pub fn delivered(&self) -> bool {
        self.bits.iter().all(|b| b.decoded_at.contains_key(&self.recipient))
    }
}

/// A decode or encode that does not fit the sender's history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub t: usize,
    pub robot: usize,
    pub detail: String,
}

/// Every message with its decodes attributed, plus whatever did not fit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecodeMatch {
    pub messages: Vec<MessageRecord>,
    /// Per sender, its encoded bits as `(message index, bit index)`, in order.
    pub encoded: Vec<Vec<(usize, usize)>>,
    pub mismatches: Vec<Mismatch>,
}

impl DecodeMatch {
    pub fn bit(&self, (m, i): (usize, usize)) -> &BitRecord {
        &self.messages[m].bits[i]
    }
}

/// Reads every observer's decodes of every sender as a prefix of what that
/// sender encoded, in order.
pub fn match_decodes(trace: &Trace) -> DecodeMatch {
    let n = trace.robots();
    let mut out = DecodeMatch {
        encoded: vec![Vec::new(); n],
        ..DecodeMatch::default()
    };
    let mut by_id: BTreeMap<MessageId, usize> = BTreeMap::new();
    // cursor[observer][sender]
    let mut cursor = vec![vec![0usize; n]; n];

    for (t, event) in trace.events() {
        match event {
            Event::Enqueued {
                robot,
                message,
                label,
                recipient,
                bits,
            } => {
                by_id.insert(*message, out.messages.len());
                out.messages.push(MessageRecord {
                    id: *message,
                    sender: *robot,
                    label: *label,
                    recipient: *recipient,
                    enqueued_at: t,
                    bits: bits
                        .iter()
                        .map(|&bit| BitRecord {
                            bit,
                            ..BitRecord::default()
                        })
                        .collect(),
                });
            }
            Event::Encoded {
                robot,
                message,
                index,
                bit,
            } => {
                let slot = by_id
                    .get(message)
                    .copied()
                    .filter(|&m| out.messages[m].sender == *robot && *index < out.messages[m].bits.len());
                match slot {
                    Some(m) if out.messages[m].bits[*index].bit == *bit => {
                        let record = &mut out.messages[m].bits[*index];
                        if record.encoded_at.is_some() {
                            out.mismatches.push(Mismatch {
                                t,
                                robot: *robot,
                                detail: format!("bit {index} of message {message} encoded twice"),
                            });
                        } else {
                            record.encoded_at = Some(t);
                            out.encoded[*robot].push((m, *index));
                        }
                    }
                    _ => out.mismatches.push(Mismatch {
                        t,
                        robot: *robot,
                        detail: format!("encoded bit {index} of message {message} does not match what was queued"),
                    }),
                }
            }
            Event::Acked { robot, message, index } => {
                match by_id
                    .get(message)
                    .and_then(|&m| out.messages[m].bits.get_mut(*index))
                {
                    Some(record) if record.encoded_at.is_some() && record.acked_at.is_none() => {
                        record.acked_at = Some(t)
                    }
                    _ => out.mismatches.push(Mismatch {
                        t,
                        robot: *robot,
                        detail: format!("acknowledged bit {index} of message {message} out of turn"),
                    }),
                }
            }
            Event::Decoded {
                robot,
                sender,
                recipient,
                bit,
                ..
            } => {
                let (observer, sender) = (*robot, *sender);
                let k = cursor[observer][sender];
                cursor[observer][sender] += 1;
                let Some(&slot) = out.encoded[sender].get(k) else {
                    out.mismatches.push(Mismatch {
                        t,
                        robot: observer,
                        detail: format!("read a bit {bit} from robot {sender}, which had not sent bit #{k}"),
                    });
                    continue;
                };
                let (m, i) = slot;
                let expected_recipient = out.messages[m].recipient;
                let record = &mut out.messages[m].bits[i];
                let encoded_at = record.encoded_at.expect("listed bits are encoded");
                if record.bit != *bit || expected_recipient != *recipient || t <= encoded_at {
                    out.mismatches.push(Mismatch {
                        t,
                        robot: observer,
                        detail: format!(
                            "read ({recipient}, {bit}) as bit #{k} of robot {sender}, which sent ({expected_recipient}, {}) at {encoded_at}",
                            record.bit
                        ),
                    });
                } else {
                    record.decoded_at.insert(observer, t);
                }
            }
            Event::DecodeFault { .. } => {}
        }
    }
    out
}

pub fn message_records(trace: &Trace) -> Vec<MessageRecord> {
    match_decodes(trace).messages
}
