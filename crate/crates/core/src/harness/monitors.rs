use serde::{Deserialize, Serialize};

use crate::geometry::{Point, EPS};
use crate::model::{Event, Trace, TraceRecord};
use crate::protocols::ProtocolKind;

use super::messages::{match_decodes, DecodeMatch};

/// Longest evidence slice kept in a verdict.
pub const MAX_EVIDENCE: usize = 64;

/// The part of a trace that shows a violation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub from: usize,
    pub to: usize,
    pub records: Vec<TraceRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub property: String,
    pub passed: bool,
    pub first_violation: Option<usize>,
    pub detail: String,
    pub evidence: Option<Evidence>,
}

impl Verdict {
    pub fn pass(property: &str, detail: impl Into<String>) -> Self {
        Verdict {
            property: property.to_string(),
            passed: true,
            first_violation: None,
            detail: detail.into(),
            evidence: None,
        }
    }

    fn not_applicable(property: &str) -> Self {
        Verdict::pass(property, "not applicable to this run")
    }
}

/// One look taken by a robot, as rebuilt from the trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub t: usize,
    /// Per robot: found more than `EPS` away from where it was last seen.
    pub changed: Vec<bool>,
}

/// Every robot's looks, with change events recomputed from positions. The
/// first look at a robot sets the reference and never counts as a change.
pub fn observation_log(trace: &Trace) -> Vec<Vec<Observation>> {
    let n = trace.robots();
    let mut last_seen: Vec<Vec<Option<Point>>> = vec![vec![None; n]; n];
    let mut log = vec![Vec::new(); n];
    for record in &trace.records {
        for &r in &record.active {
            let changed = (0..n)
                .map(|p| {
                    let now = record.positions[p];
                    let moved = p != r && last_seen[r][p].is_some_and(|q| q.distance(now) > EPS);
                    last_seen[r][p] = Some(now);
                    moved
                })
                .collect();
            log[r].push(Observation { t: record.t, changed });
        }
    }
    log
}

/// Window within which, under fairness window `b`, every robot records a
/// change of every other robot of an asynchronous protocol.
///
/// The peer moves at each of its activations, at least once in any `b`
/// consecutive instants starting at a look, and the observer looks again
/// within `b` instants of that move: consecutive changes are at most
/// `2b - 1` apart.
pub fn change_window_bound(b: usize) -> usize {
    2 * b
}

struct Context<'a> {
    trace: &'a Trace,
    kind: Option<ProtocolKind>,
    matched: DecodeMatch,
    /// Bits encoded and not yet read by their addressee, per instant.
    in_flight: Vec<usize>,
}

impl<'a> Context<'a> {
    fn new(trace: &'a Trace) -> Self {
        let matched = match_decodes(trace);
        let len = trace.records.len();
        let mut delta = vec![0i64; len + 1];
        for msg in &matched.messages {
            for bit in &msg.bits {
                let Some(e) = bit.encoded_at else { continue };
                let end = bit.decoded_at.get(&msg.recipient).copied().unwrap_or(len);
                delta[e.min(len)] += 1;
                delta[end.min(len)] -= 1;
            }
        }
        let mut running = 0i64;
        let in_flight = delta[..len]
            .iter()
            .map(|d| {
                running += d;
                running as usize
            })
            .collect();
        Context {
            trace,
            kind: ProtocolKind::from_name(&trace.meta.protocol),
            matched,
            in_flight,
        }
    }

    fn asynchronous(&self) -> bool {
        self.kind.map_or(!self.trace.meta.synchronous, |k| !k.is_synchronous())
    }

    fn broadcast(&self) -> bool {
        matches!(self.kind, Some(ProtocolKind::SyncN(_) | ProtocolKind::AsyncN(_)))
    }

    fn end(&self) -> usize {
        self.trace.last_instant()
    }

    fn fail(&self, property: &str, t: usize, detail: String) -> Verdict {
        let t = t.min(self.end());
        let quiet = (0..=t)
            .rev()
            .find(|&s| self.in_flight.get(s).is_none_or(|&k| k == 0))
            .unwrap_or(0);
        let from = quiet.max((t + 1).saturating_sub(MAX_EVIDENCE));
        Verdict {
            property: property.to_string(),
            passed: false,
            first_violation: Some(t),
            detail,
            evidence: Some(Evidence {
                from,
                to: t,
                records: self.trace.records[from..=t].to_vec(),
            }),
        }
    }
}

/// Earliest of several candidate violations.
fn earliest(found: &mut Option<(usize, String)>, t: usize, detail: impl FnOnce() -> String) {
    if found.as_ref().is_none_or(|(s, _)| t < *s) {
        *found = Some((t, detail()));
    }
}

fn finish(cx: &Context, property: &str, found: Option<(usize, String)>, ok: impl Into<String>) -> Verdict {
    match found {
        Some((t, detail)) => cx.fail(property, t, detail),
        None => Verdict::pass(property, ok),
    }
}

fn well_formed(cx: &Context) -> Verdict {
    let n = cx.trace.robots();
    let mut found = None;
    for (i, r) in cx.trace.records.iter().enumerate() {
        if r.t != i
            || r.positions.len() != n
            || r.phases.len() != n
            || r.destinations.len() != n
            || r.active.iter().any(|&a| a >= n)
        {
            found = Some((i, format!("record {i} is malformed")));
            break;
        }
    }
    finish(cx, "well_formed", found, format!("{} records", cx.trace.records.len()))
}

fn emission(cx: &Context) -> Verdict {
    let Some(slack) = cx.trace.meta.emission_slack else {
        return Verdict::pass("emission", "no bound without a fairness guarantee");
    };
    let end = cx.end();
    let mut found = None;
    let mut checked = 0;
    for sender in 0..cx.trace.robots() {
        let mut previous: Option<usize> = None;
        for msg in cx.matched.messages.iter().filter(|m| m.sender == sender) {
            for (i, bit) in msg.bits.iter().enumerate() {
                let ready = previous.map_or(msg.enqueued_at, |p| p.max(msg.enqueued_at));
                let deadline = ready + slack;
                match bit.encoded_at {
                    Some(e) if e <= deadline => {
                        checked += 1;
                        previous = Some(e);
                    }
                    Some(_) => {
                        earliest(&mut found, deadline, || {
                            format!("robot {sender} took more than {slack} instants to start bit {i} of message {}", msg.id)
                        });
                        previous = bit.encoded_at;
                    }
                    None => {
                        if deadline <= end {
                            earliest(&mut found, deadline, || {
                                format!("robot {sender} never started bit {i} of message {}", msg.id)
                            });
                        }
                        break;
                    }
                }
            }
        }
    }
    finish(cx, "emission", found, format!("{checked} bits started within {slack} instants"))
}

/// Checks that `observer` read every bit encoded early enough, and that
/// acknowledged bits were read before the acknowledgment.
fn delivery(cx: &Context, property: &str, addressee: bool) -> Verdict {
    let slack = cx.trace.meta.receipt_slack;
    let end = cx.end();
    let mut found = None;
    let mut checked = 0;
    for mismatch in &cx.matched.mismatches {
        earliest(&mut found, mismatch.t, || format!("robot {}: {}", mismatch.robot, mismatch.detail));
    }
    for msg in &cx.matched.messages {
        let observers: Vec<usize> = if addressee {
            vec![msg.recipient]
        } else {
            (0..cx.trace.robots())
                .filter(|&o| o != msg.sender && o != msg.recipient)
                .collect()
        };
        for (i, bit) in msg.bits.iter().enumerate() {
            let Some(e) = bit.encoded_at else { continue };
            for &o in &observers {
                let read = bit.decoded_at.get(&o).copied();
                if let Some(k) = slack {
                    let deadline = e + k;
                    match read {
                        Some(d) if d <= deadline => {}
                        _ if deadline > end => {}
                        _ => earliest(&mut found, deadline, || {
                            format!(
                                "robot {o} had not read bit {i} of message {} from robot {} within {k} instants",
                                msg.id, msg.sender
                            )
                        }),
                    }
                }
                if addressee {
                    if let Some(a) = bit.acked_at {
                        if read.is_none_or(|d| d > a) {
                            earliest(&mut found, a, || {
                                format!(
                                    "robot {} moved on from bit {i} of message {} before robot {o} read it",
                                    msg.sender, msg.id
                                )
                            });
                        }
                    }
                }
                if read.is_some() {
                    checked += 1;
                }
            }
        }
    }
    finish(cx, property, found, format!("{checked} bit readings"))
}

fn receipt(cx: &Context) -> Verdict {
    let mut v = delivery(cx, "receipt", true);
    if v.passed {
        let delivered = cx.matched.messages.iter().filter(|m| m.delivered()).count();
        v.detail = format!("{}; {delivered}/{} messages complete", v.detail, cx.matched.messages.len());
    }
    v
}

fn redundancy(cx: &Context) -> Verdict {
    if !cx.broadcast() {
        return Verdict::not_applicable("redundancy");
    }
    delivery(cx, "redundancy", false)
}

fn fifo(cx: &Context) -> Verdict {
    let mut found = None;
    let n = cx.trace.robots();
    for sender in 0..n {
        for recipient in 0..n {
            let queued: Vec<(usize, usize)> = cx
                .matched
                .messages
                .iter()
                .enumerate()
                .filter(|(_, m)| m.sender == sender && m.recipient == recipient)
                .flat_map(|(k, m)| (0..m.bits.len()).map(move |i| (k, i)))
                .collect();
            let encoded: Vec<(usize, usize)> = cx.matched.encoded[sender]
                .iter()
                .copied()
                .filter(|&(k, _)| cx.matched.messages[k].recipient == recipient)
                .collect();
            for (j, slot) in encoded.iter().enumerate() {
                if queued.get(j) != Some(slot) {
                    let t = cx.matched.bit(*slot).encoded_at.unwrap_or(0);
                    earliest(&mut found, t, || {
                        format!("robot {sender} sent bits for robot {recipient} out of queue order")
                    });
                    break;
                }
            }
            let mut last = None;
            for slot in &encoded {
                let Some(d) = cx.matched.bit(*slot).decoded_at.get(&recipient).copied() else {
                    continue;
                };
                if last.is_some_and(|l| d < l) {
                    earliest(&mut found, d, || {
                        format!("robot {recipient} read bits from robot {sender} out of order")
                    });
                }
                last = Some(d);
            }
        }
    }
    finish(cx, "fifo", found, "per-pair order preserved")
}

fn decode_faults(cx: &Context) -> Verdict {
    let found = cx.trace.events().find_map(|(t, e)| match e {
        Event::DecodeFault { robot, sender, reason } => {
            Some((t, format!("robot {robot} could not read robot {sender}: {reason}")))
        }
        _ => None,
    });
    finish(cx, "decode_faults", found, "every observed move was readable")
}

fn collision(cx: &Context) -> Verdict {
    let mut found = None;
    'outer: for r in &cx.trace.records {
        for i in 0..r.positions.len() {
            for j in i + 1..r.positions.len() {
                if r.positions[i].distance(r.positions[j]) <= EPS {
                    found = Some((r.t, format!("robots {i} and {j} meet")));
                    break 'outer;
                }
            }
        }
    }
    finish(cx, "collision", found, "robots stay apart")
}

fn containment(cx: &Context) -> Verdict {
    let discs: Vec<_> = cx.trace.meta.robots.iter().map(|m| m.granular).collect();
    if discs.iter().all(Option::is_none) {
        return Verdict::not_applicable("containment");
    }
    let mut found = None;
    'outer: for r in &cx.trace.records {
        for (i, disc) in discs.iter().enumerate() {
            let Some(c) = disc else { continue };
            if r.positions[i].distance(c.center) + EPS >= c.radius {
                found = Some((r.t, format!("robot {i} reached the border of its granular")));
                break 'outer;
            }
        }
    }
    finish(cx, "containment", found, "every robot strictly inside its granular")
}

fn silence(cx: &Context) -> Verdict {
    if cx.asynchronous() {
        return Verdict::not_applicable("silence");
    }
    let mut found = None;
    let Some(first) = cx.trace.records.first() else {
        return Verdict::pass("silence", "empty trace");
    };
    'outer: for r in &cx.trace.records {
        for (i, m) in cx.trace.meta.robots.iter().enumerate() {
            if m.silent && r.positions[i] != first.positions[i] {
                found = Some((r.t, format!("robot {i} moved with nothing to send")));
                break 'outer;
            }
        }
    }
    finish(cx, "silence", found, "robots without messages never moved")
}

fn always_moves(cx: &Context) -> Verdict {
    if !cx.asynchronous() {
        return Verdict::not_applicable("always_moves");
    }
    let mut found = None;
    'outer: for pair in cx.trace.records.windows(2) {
        for &r in &pair[0].active {
            if pair[0].positions[r] == pair[1].positions[r] {
                found = Some((pair[0].t, format!("robot {r} was activated and stayed put")));
                break 'outer;
            }
        }
    }
    finish(cx, "always_moves", found, "every activation moved its robot")
}

/// Phase counter of a tag such as `send:1#4`.
fn phase_id(tag: &str) -> &str {
    tag.rsplit_once('#').map_or(tag, |(_, n)| n)
}

/// Stretch of activations of one robot in a single phase.
struct Segment {
    robot: usize,
    /// Activation that started the phase.
    start: usize,
    /// Later activations whose look belongs to this phase.
    looks: Vec<usize>,
}

/// Splits every robot's activations into phases. The look taken at an
/// activation belongs to the phase the robot was in before it.
fn segments(trace: &Trace) -> Vec<Segment> {
    let n = trace.robots();
    let mut open: Vec<Option<Segment>> = (0..n).map(|_| None).collect();
    let mut out = Vec::new();
    for record in &trace.records {
        for &r in &record.active {
            let tag = phase_id(&record.phases[r]);
            let same = open[r]
                .as_ref()
                .is_some_and(|s| phase_id(&trace.records[s.start].phases[r]) == tag);
            if let Some(s) = open[r].as_mut() {
                s.looks.push(record.t);
            }
            if !same {
                out.extend(open[r].take());
                open[r] = Some(Segment {
                    robot: r,
                    start: record.t,
                    looks: Vec::new(),
                });
            }
        }
    }
    out.extend(open.into_iter().flatten());
    out
}

/// Runs `check(segment, peer, second_change)` at each point
/// where a robot, within one phase, has recorded its second change of a peer.
fn at_second_changes(cx: &Context, mut check: impl FnMut(&Segment, usize, usize) -> Option<String>) -> Option<(usize, String)> {
    let log = observation_log(cx.trace);
    let n = cx.trace.robots();
    let mut found = None;
    for seg in segments(cx.trace) {
        let mine = &log[seg.robot];
        for peer in (0..n).filter(|&p| p != seg.robot) {
            let second = seg
                .looks
                .iter()
                .filter(|&&s| {
                    mine.binary_search_by_key(&s, |o| o.t)
                        .is_ok_and(|k| mine[k].changed[peer])
                })
                .nth(1);
            if let Some(&s2) = second {
                if let Some(detail) = check(&seg, peer, s2) {
                    earliest(&mut found, s2, || detail);
                }
            }
        }
    }
    found
}

/// Looks taken by `peer` strictly between `after` and `before`, with what it
/// saw of `robot`.
fn sightings(trace: &Trace, peer: usize, robot: usize, after: usize, before: usize) -> Vec<Point> {
    trace.records[after + 1..before]
        .iter()
        .filter(|r| r.active.contains(&peer))
        .map(|r| r.positions[robot])
        .collect()
}

fn seen_twice(cx: &Context) -> Verdict {
    if !cx.asynchronous() {
        return Verdict::not_applicable("seen_twice");
    }
    let mut fired = 0;
    let found = at_second_changes(cx, |seg, peer, s2| {
        fired += 1;
        let turn = cx.trace.records[seg.start].positions[seg.robot];
        let seen = sightings(cx.trace, peer, seg.robot, seg.start, s2);
        (!seen.iter().any(|p| p.distance(turn) > EPS)).then(|| {
            format!(
                "robot {} saw robot {peer} move twice after turning at {}, but robot {peer} never saw it move",
                seg.robot, seg.start
            )
        })
    });
    finish(cx, "seen_twice", found, format!("{fired} acknowledgments checked"))
}

fn sighting_on_line(cx: &Context) -> Verdict {
    if !cx.asynchronous() {
        return Verdict::not_applicable("sighting_on_line");
    }
    let found = at_second_changes(cx, |seg, peer, s2| {
        let records = &cx.trace.records;
        let turn = records[seg.start].positions[seg.robot];
        let now = records[s2].positions[seg.robot];
        let dir = (now - turn).normalized()?;
        let scale = 1.0 + turn.x.abs().max(turn.y.abs()) + now.distance(turn);
        let on_ray = sightings(cx.trace, peer, seg.robot, seg.start, s2)
            .into_iter()
            .any(|p| {
                let v = p - turn;
                v.dot(dir) > EPS && v.cross(dir).abs() <= 1e-9 * scale
            });
        (!on_ray).then(|| {
            format!(
                "robot {peer} never saw robot {} on its line of motion since {}",
                seg.robot, seg.start
            )
        })
    });
    finish(cx, "sighting_on_line", found, "every acknowledgment preceded by a sighting on the line of motion")
}

fn change_window(cx: &Context) -> Verdict {
    let window = match (cx.asynchronous(), &cx.trace.meta.schedule) {
        (true, crate::model::ActivationSchedule::RandomFair { window, .. }) => *window,
        _ => return Verdict::not_applicable("change_window"),
    };
    let bound = change_window_bound(window);
    let log = observation_log(cx.trace);
    let end = cx.end();
    let mut found = None;
    let mut widest = 0;
    for (r, looks) in log.iter().enumerate() {
        let Some(first) = looks.first() else { continue };
        for p in (0..cx.trace.robots()).filter(|&p| p != r) {
            let mut anchor = first.t;
            for c in looks.iter().filter(|o| o.changed[p]).map(|o| o.t) {
                widest = widest.max(c - anchor);
                if c - anchor > bound {
                    earliest(&mut found, anchor + bound, || {
                        format!("robot {r} recorded no change of robot {p} for {bound} instants after {anchor}")
                    });
                }
                anchor = c;
            }
            // Activations run up to the instant before the final record.
            if anchor + bound < end {
                earliest(&mut found, anchor + bound, || {
                    format!("robot {r} recorded no change of robot {p} after {anchor}")
                });
            }
        }
    }
    finish(
        cx,
        "change_window",
        found,
        format!("longest gap between changes {widest}, bound {bound}"),
    )
}

fn decay(cx: &Context) -> Verdict {
    if !matches!(cx.kind, Some(ProtocolKind::AsyncN(_))) {
        return Verdict::not_applicable("decay");
    }
    let mut found = None;
    let records = &cx.trace.records;
    let mut phases = 0;
    for seg in segments(cx.trace) {
        let tag = &records[seg.start].phases[seg.robot];
        if tag.starts_with("return") {
            continue;
        }
        let Some(mu) = cx.trace.meta.robots[seg.robot].step else { continue };
        phases += 1;
        let mut total = 0.0;
        let moves = std::iter::once(seg.start).chain(seg.looks.iter().copied());
        for t in moves {
            if records[t].phases[seg.robot] != *tag || t + 1 >= records.len() {
                break;
            }
            total += records[t].positions[seg.robot].distance(records[t + 1].positions[seg.robot]);
            if total >= 2.0 * mu {
                earliest(&mut found, t, || {
                    format!("robot {} covered {total} in phase {tag}, not below 2μ = {}", seg.robot, 2.0 * mu)
                });
                break;
            }
        }
    }
    finish(cx, "decay", found, format!("{phases} phases below 2μ"))
}

/// Every property checked over a complete trace, in a fixed order.
pub fn monitor_suite(trace: &Trace) -> Vec<Verdict> {
    let cx = Context::new(trace);
    let shape = well_formed(&cx);
    if !shape.passed {
        return vec![shape];
    }
    vec![
        shape,
        emission(&cx),
        receipt(&cx),
        fifo(&cx),
        redundancy(&cx),
        decode_faults(&cx),
        collision(&cx),
        containment(&cx),
        silence(&cx),
        seen_twice(&cx),
        sighting_on_line(&cx),
        always_moves(&cx),
        change_window(&cx),
        decay(&cx),
    ]
}
