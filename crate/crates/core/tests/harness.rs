mod common;

use common::*;
use stigmergy::geometry::{Circle, Point};
use stigmergy::harness::{
    explore_schedules, match_decodes, message_records, monitor_suite, read_trace, write_trace, HarnessError, Verdict,
};
use stigmergy::model::{
    ActivationSchedule, Event, RobotMeta, RunMeta, SendError, Trace, TraceRecord, TRACE_FORMAT,
};
use stigmergy::protocols::ProtocolKind;

fn verdict<'a>(verdicts: &'a [Verdict], name: &str) -> &'a Verdict {
    verdicts.iter().find(|v| v.property == name).unwrap()
}

fn sync2_trace(bits: &[bool]) -> Trace {
    let pts = [Point::new(0.0, 0.0), Point::new(2.0, 6.0)];
    let mut s = session(ProtocolKind::Sync2, &pts, 1.0, &ActivationSchedule::Synchronous, 3);
    s.send(0, 1, bits).unwrap();
    s.run_script(&[], 2 * bits.len() + 4).unwrap();
    s.into_trace()
}

/// A trace written by hand: `tracks[t][r]` is robot `r`'s position at `t`.
fn handmade(protocol: &str, tracks: &[Vec<Point>], active: &[Vec<usize>], phases: &[Vec<&str>], robots: Vec<RobotMeta>) -> Trace {
    let n = tracks[0].len();
    Trace {
        meta: RunMeta {
            format: TRACE_FORMAT.to_string(),
            protocol: protocol.to_string(),
            synchronous: false,
            schedule: ActivationSchedule::Explicit { sets: active.to_vec() },
            fairness_window: None,
            receipt_slack: None,
            emission_slack: None,
            horizon: tracks.len() - 1,
            robots,
        },
        records: tracks
            .iter()
            .enumerate()
            .map(|(t, pos)| TraceRecord {
                t,
                active: active.get(t).cloned().unwrap_or_default(),
                positions: pos.clone(),
                phases: phases.get(t).map_or(vec!["idle".to_string(); n], |p| p.iter().map(|s| s.to_string()).collect()),
                destinations: vec![None; n],
                events: Vec::new(),
            })
            .collect(),
    }
}

fn plain_meta(n: usize) -> Vec<RobotMeta> {
    vec![
        RobotMeta {
            sigma: 1.0,
            step: None,
            granular: None,
            silent: false,
        };
        n
    ]
}

#[test]
fn send_records_the_message() {
    let pts = [Point::new(0.0, 0.0), Point::new(2.0, 6.0)];
    let mut s = session(ProtocolKind::Sync2, &pts, 1.0, &ActivationSchedule::Synchronous, 3);
    let id = s.send(0, 1, &[true, false, true]).unwrap();
    let trace = s.into_trace();
    let records = message_records(&trace);
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].id, id);
    assert_eq!(records[0].recipient, 1);
    assert_eq!(records[0].bits.iter().map(|b| b.bit).collect::<Vec<_>>(), vec![1, 0, 1]);
}

#[test]
fn send_rejects_self_and_empty() {
    let pts = [Point::new(0.0, 0.0), Point::new(2.0, 6.0)];
    let mut s = session(ProtocolKind::Sync2, &pts, 1.0, &ActivationSchedule::Synchronous, 3);
    assert!(matches!(
        s.send(0, 0, &[true]),
        Err(HarnessError::Send { robot: 0, source: SendError::SelfAddressed })
    ));
    assert!(matches!(
        s.send(1, 1, &[]),
        Err(HarnessError::Send { robot: 1, source: SendError::Empty })
    ));
    assert!(matches!(s.send(2, 1, &[true]), Err(HarnessError::UnknownRobot(2))));
}

#[test]
fn messages_to_one_recipient_leave_in_order() {
    let pts = [Point::new(0.0, 0.0), Point::new(9.0, 1.0), Point::new(4.0, 8.0)];
    let kind = ProtocolKind::from_name("async_n").unwrap();
    let mut s = session(kind, &pts, 1.0, &ActivationSchedule::RandomFair { seed: 2, window: 8 }, 2);
    s.send_to(0, 1, &[true, true]).unwrap();
    s.send_to(0, 1, &[false]).unwrap();
    s.run_script(&[], 1500).unwrap();
    let trace = s.into_trace();
    let m = match_decodes(&trace);
    let encoded: Vec<usize> = m.messages.iter().flat_map(|msg| msg.bits.iter().map(|b| b.encoded_at.unwrap())).collect();
    assert!(encoded.windows(2).all(|w| w[0] < w[1]), "{encoded:?}");
    assert!(monitor_suite(&trace).iter().all(|v| v.passed));
}

#[test]
fn missed_bit_fails_receipt_with_evidence() {
    let mut trace = sync2_trace(&[true, false, true]);
    assert!(monitor_suite(&trace).iter().all(|v| v.passed));
    // Robot 1 reads bit 1 (sent at 2) at instant 3; drop that reading.
    let rec = &mut trace.records[3];
    let before = rec.events.len();
    rec.events.retain(|e| !matches!(e, Event::Decoded { robot: 1, .. }));
    assert_eq!(rec.events.len(), before - 1);
    let verdicts = monitor_suite(&trace);
    let receipt = verdict(&verdicts, "receipt");
    assert!(!receipt.passed);
    let evidence = receipt.evidence.as_ref().expect("failures carry evidence");
    assert!(evidence.from <= 2 && evidence.to >= 3);
    assert_eq!(evidence.records.len(), evidence.to - evidence.from + 1);
}

#[test]
fn leaving_the_granular_fails_containment_at_the_exit() {
    let pts = [Point::new(0.0, 0.0), Point::new(10.0, 0.0), Point::new(0.0, 10.0)];
    let kind = ProtocolKind::from_name("sync_n_sod").unwrap();
    let mut s = session(kind, &pts, 1.0, &ActivationSchedule::Synchronous, 3);
    s.send_to(0, 1, &[true, true, true]).unwrap();
    s.run_script(&[], 10).unwrap();
    let mut trace = s.into_trace();
    assert!(verdict(&monitor_suite(&trace), "containment").passed);
    trace.records[5].positions[2] = Point::new(0.0, 16.0);
    trace.records[6].positions[2] = Point::new(0.0, 17.0);
    let verdicts = monitor_suite(&trace);
    let v = verdict(&verdicts, "containment");
    assert!(!v.passed);
    assert_eq!(v.first_violation, Some(5));
    assert!(!verdict(&verdicts, "silence").passed);
}

#[test]
fn acknowledgment_without_a_look_fails_seen_twice() {
    let p = |x: f64, y: f64| Point::new(x, y);
    // Robot 1 is carried along without ever looking; robot 0 sees it move.
    let tracks: Vec<Vec<Point>> = (0..6).map(|t| vec![p(0.0, -(t as f64)), p(5.0, t as f64)]).collect();
    let active = vec![vec![0]; 5];
    let phases = vec![vec!["north#1", "north#1"]; 6];
    let trace = handmade("async2", &tracks, &active, &phases, plain_meta(2));
    let verdicts = monitor_suite(&trace);
    let v = verdict(&verdicts, "seen_twice");
    assert!(!v.passed);
    assert_eq!(v.first_violation, Some(2));
    assert!(!verdict(&verdicts, "sighting_on_line").passed);
}

#[test]
fn idle_activation_fails_always_moves() {
    let p = |x: f64, y: f64| Point::new(x, y);
    let tracks = vec![vec![p(0.0, 0.0), p(5.0, 0.0)], vec![p(0.0, 1.0), p(5.0, 0.0)], vec![p(0.0, 2.0), p(5.0, 0.0)]];
    let active = vec![vec![0], vec![0, 1]];
    let trace = handmade("async2", &tracks, &active, &[], plain_meta(2));
    let v = monitor_suite(&trace).into_iter().find(|v| v.property == "always_moves").unwrap();
    assert!(!v.passed);
    assert_eq!(v.first_violation, Some(1));
}

#[test]
fn overlong_phase_fails_decay() {
    let p = |x: f64, y: f64| Point::new(x, y);
    let tracks: Vec<Vec<Point>> = (0..5).map(|t| vec![p(0.0, 0.3 * t as f64), p(20.0, 0.0)]).collect();
    let active = vec![vec![0]; 4];
    let phases = vec![vec!["kappa-out#1", "kappa-out#0"]; 5];
    let mut robots = plain_meta(2);
    robots[0].step = Some(0.5);
    robots[0].granular = Some(Circle::new(p(0.0, 0.0), 10.0));
    let trace = handmade("async_n", &tracks, &active, &phases, robots);
    let v = monitor_suite(&trace).into_iter().find(|v| v.property == "decay").unwrap();
    assert!(!v.passed);
    assert_eq!(v.first_violation, Some(3));
}

#[test]
fn monitors_are_pure_and_survive_the_trace_file() {
    let trace = sync2_trace(&[false, true]);
    let first = monitor_suite(&trace);
    assert_eq!(first, monitor_suite(&trace));
    let mut buf = Vec::new();
    write_trace(&trace, &mut buf).unwrap();
    let back = read_trace(&buf[..]).unwrap();
    assert_eq!(back, trace);
    assert_eq!(monitor_suite(&back), first);
}

#[test]
fn explorer_counts_schedules() {
    let pts = [Point::new(0.0, 0.0), Point::new(3.0, 1.0)];
    let schedule = ActivationSchedule::Explicit { sets: Vec::new() };
    let mut s = session(ProtocolKind::Async2, &pts, 0.5, &schedule, 1);
    s.send(0, 1, &[true]).unwrap();
    for (h, total) in [(1, 3), (2, 9), (5, 243)] {
        let report = explore_schedules(&s, h, u64::MAX).unwrap();
        assert_eq!((report.total, report.explored), (total, total as u64));
        assert!(report.exhaustive && report.verdict.passed);
    }
    let partial = explore_schedules(&s, 6, 100).unwrap();
    assert_eq!(partial.explored, 100);
    assert!(!partial.exhaustive);
    assert!(!partial.verdict.passed);
    assert!(partial.verdict.detail.starts_with("partial"));
}

#[test]
fn explorer_covers_three_robots() {
    let pts = [Point::new(0.0, 0.0), Point::new(6.0, 1.0), Point::new(2.0, 5.0)];
    let kind = ProtocolKind::from_name("async_n").unwrap();
    let mut s = session(kind, &pts, 0.5, &ActivationSchedule::Explicit { sets: Vec::new() }, 1);
    s.send_to(0, 2, &[true]).unwrap();
    let report = explore_schedules(&s, 3, u64::MAX).unwrap();
    assert_eq!(report.total, 343);
    assert!(report.verdict.passed, "{}", report.verdict.detail);
}
