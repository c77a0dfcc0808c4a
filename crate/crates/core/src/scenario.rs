//! Scenario files: a protocol, robots, a schedule and a message script.
//!
//! ```toml
//! format_version = 1
//! protocol = "async_n"      # sync2 | sync_n_id | sync_n_sod | sync_n_chirality
//!                           # async2 | async_n | async_n_id | async_n_sod
//! horizon = 4000
//! seed = 7                  # seeds random_fair schedules
//!
//! [schedule]
//! kind = "random_fair"      # synchronous | random_fair | explicit
//! window = 8                # random_fair only, defaults to 8
//! # sets = [[0, 1], [1]]    # explicit only
//!
//! [[robots]]
//! position = [0.0, 0.0]
//! sigma = 1.0
//! visible_id = 4            # required by the *_id protocols
//! frame_seed = 11           # defaults to the robot's index
//!
//! [[messages]]
//! sender = 0
//! recipient = 1             # label under the sender's own naming
//! bits = "0110"
//! at = 0
//! ```

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{find_duplicate, Point};
use crate::harness::{
    explore_schedules, match_decodes, monitor_suite, robot_specs, write_trace, ExploreReport, HarnessError,
    ScriptedMessage, Session, TraceIoError, Verdict,
};
use crate::model::{ActivationSchedule, Trace, DEFAULT_WINDOW};
use crate::protocols::{Mutations, ProtocolKind};

pub const FORMAT_VERSION: u32 = 1;

/// Schedules the explorer will run before giving up, unless overridden.
pub const DEFAULT_EXPLORE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported format_version {0}, expected {FORMAT_VERSION}")]
    Version(u32),
    #[error("unknown protocol {0:?}")]
    UnknownProtocol(String),
    #[error("{protocol} needs {needed}, found {found} robots")]
    RobotCount {
        protocol: &'static str,
        needed: &'static str,
        found: usize,
    },
    #[error("{0} assumes a synchronous schedule")]
    NeedsSynchronous(&'static str),
    #[error("robots {0} and {1} start at the same position")]
    DuplicatePosition(usize, usize),
    #[error("robot {robot}: {reason}")]
    Robot { robot: usize, reason: String },
    #[error("{0} needs a visible_id on every robot")]
    MissingVisibleIds(&'static str),
    #[error("message {index}: {reason}")]
    Message { index: usize, reason: String },
    #[error("schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Setup(#[from] HarnessError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Trace(#[from] TraceIoError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Synchronous,
    RandomFair {
        #[serde(default)]
        window: Option<usize>,
    },
    Explicit {
        sets: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotEntry {
    pub position: [f64; 2],
    pub sigma: f64,
    #[serde(default)]
    pub visible_id: Option<u32>,
    #[serde(default)]
    pub frame_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageEntry {
    pub sender: usize,
    pub recipient: usize,
    pub bits: String,
    #[serde(default)]
    pub at: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub protocol: String,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    pub schedule: ScheduleSpec,
    pub robots: Vec<RobotEntry>,
    #[serde(default)]
    pub messages: Vec<MessageEntry>,
    #[serde(default)]
    pub explore_budget: Option<u64>,
}

fn parse_bits(bits: &str) -> Option<Vec<bool>> {
    let parsed: Option<Vec<bool>> = bits
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect();
    parsed.filter(|b| !b.is_empty())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_toml(&text)
    }

    pub fn kind(&self) -> Result<ProtocolKind, ScenarioError> {
        ProtocolKind::from_name(&self.protocol).ok_or_else(|| ScenarioError::UnknownProtocol(self.protocol.clone()))
    }

    pub fn positions(&self) -> Vec<Point> {
        self.robots.iter().map(|r| Point::new(r.position[0], r.position[1])).collect()
    }

    pub fn activation_schedule(&self) -> ActivationSchedule {
        match &self.schedule {
            ScheduleSpec::Synchronous => ActivationSchedule::Synchronous,
            ScheduleSpec::RandomFair { window } => ActivationSchedule::RandomFair {
                seed: self.seed,
                window: window.unwrap_or(DEFAULT_WINDOW),
            },
            ScheduleSpec::Explicit { sets } => ActivationSchedule::Explicit { sets: sets.clone() },
        }
    }

    pub fn script(&self) -> Vec<ScriptedMessage> {
        self.messages
            .iter()
            .map(|m| ScriptedMessage {
                sender: m.sender,
                label: m.recipient,
                bits: parse_bits(&m.bits).unwrap_or_default(),
                at: m.at,
            })
            .collect()
    }

    /// Checks every assumption the protocol makes that can be checked
    /// without running it.
    pub fn validate(&self) -> Result<ProtocolKind, ScenarioError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ScenarioError::Version(self.format_version));
        }
        let kind = self.kind()?;
        let n = self.robots.len();
        if kind.two_robots_only() && n != 2 {
            return Err(ScenarioError::RobotCount {
                protocol: kind.name(),
                needed: "exactly 2",
                found: n,
            });
        }
        if n < 2 {
            return Err(ScenarioError::RobotCount {
                protocol: kind.name(),
                needed: "at least 2",
                found: n,
            });
        }
        if kind.is_synchronous() && self.schedule != ScheduleSpec::Synchronous {
            return Err(ScenarioError::NeedsSynchronous(kind.name()));
        }
        for (robot, r) in self.robots.iter().enumerate() {
            if !(r.position[0].is_finite() && r.position[1].is_finite()) {
                return Err(ScenarioError::Robot {
                    robot,
                    reason: "position must be finite".into(),
                });
            }
            if !(r.sigma > 0.0 && r.sigma.is_finite()) {
                return Err(ScenarioError::Robot {
                    robot,
                    reason: format!("sigma must be positive, got {}", r.sigma),
                });
            }
        }
        if let Some((i, j)) = find_duplicate(&self.positions()) {
            return Err(ScenarioError::DuplicatePosition(i, j));
        }
        if kind.naming() == Some(crate::protocols::NamingMode::Identified)
            && self.robots.iter().any(|r| r.visible_id.is_none())
        {
            return Err(ScenarioError::MissingVisibleIds(kind.name()));
        }
        match &self.schedule {
            ScheduleSpec::RandomFair { window: Some(0) } => {
                return Err(ScenarioError::Schedule("window must be positive".into()))
            }
            ScheduleSpec::Explicit { sets } => {
                if sets.len() < self.horizon {
                    return Err(ScenarioError::Schedule(format!(
                        "{} active sets listed for a horizon of {}",
                        sets.len(),
                        self.horizon
                    )));
                }
                for (t, set) in sets.iter().enumerate() {
                    if set.is_empty() {
                        return Err(ScenarioError::Schedule(format!("empty active set at instant {t}")));
                    }
                    if let Some(r) = set.iter().find(|&&r| r >= n) {
                        return Err(ScenarioError::Schedule(format!("instant {t} activates unknown robot {r}")));
                    }
                }
            }
            _ => {}
        }
        for (index, m) in self.messages.iter().enumerate() {
            let reason = if m.sender >= n {
                Some(format!("no robot {}", m.sender))
            } else if parse_bits(&m.bits).is_none() {
                Some(format!("bits must be a nonempty string of 0 and 1, got {:?}", m.bits))
            } else if m.at > self.horizon {
                Some(format!("sent at {} after the horizon {}", m.at, self.horizon))
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(ScenarioError::Message { index, reason });
            }
        }
        Ok(kind)
    }

    /// A session at instant 0 with nothing sent yet.
    pub fn session(&self, mutations: Mutations) -> Result<Session, ScenarioError> {
        let kind = self.validate()?;
        let positions = self.positions();
        let sigmas: Vec<f64> = self.robots.iter().map(|r| r.sigma).collect();
        let ids: Option<Vec<u32>> = self.robots.iter().map(|r| r.visible_id).collect();
        let seeds: Vec<u64> = self
            .robots
            .iter()
            .enumerate()
            .map(|(i, r)| r.frame_seed.unwrap_or(i as u64))
            .collect();
        let ids = if kind.naming() == Some(crate::protocols::NamingMode::Identified) {
            ids
        } else {
            None
        };
        let specs = robot_specs(kind, &positions, &sigmas, ids.as_deref(), &seeds)?;
        Ok(Session::new(kind, positions, specs, &self.activation_schedule(), mutations)?)
    }
}

fn with_message_index(err: HarnessError, script: &[ScriptedMessage], session: &Session) -> ScenarioError {
    match err {
        HarnessError::Send { robot, source } => {
            let index = script
                .iter()
                .position(|m| m.sender == robot && m.at <= session.time())
                .unwrap_or(0);
            ScenarioError::Message {
                index,
                reason: source.to_string(),
            }
        }
        other => other.into(),
    }
}

/// Bits and distances of a finished run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub protocol: String,
    pub robots: usize,
    pub horizon: usize,
    pub seed: u64,
    pub messages: usize,
    pub messages_delivered: usize,
    pub bits_queued: usize,
    pub bits_sent: usize,
    pub bits_delivered: usize,
    /// Instant of the last bit read by its addressee.
    pub last_delivery: Option<usize>,
    /// Last instant at which any robot was still moving.
    pub steps_used: usize,
    pub distance_travelled: Vec<f64>,
    pub verdicts_passed: usize,
    pub verdicts_failed: usize,
    pub passed: bool,
}

pub fn summarize(scenario: &Scenario, trace: &Trace, verdicts: &[Verdict]) -> Summary {
    let matched = match_decodes(trace);
    let bits = matched.messages.iter().flat_map(|m| m.bits.iter().map(move |b| (m.recipient, b)));
    let distance_travelled = (0..trace.robots())
        .map(|r| {
            trace
                .records
                .windows(2)
                .map(|w| w[0].positions[r].distance(w[1].positions[r]))
                .sum()
        })
        .collect();
    let failed = verdicts.iter().filter(|v| !v.passed).count();
    Summary {
        protocol: trace.meta.protocol.clone(),
        robots: trace.robots(),
        horizon: trace.meta.horizon,
        seed: scenario.seed,
        messages: matched.messages.len(),
        messages_delivered: matched.messages.iter().filter(|m| m.delivered()).count(),
        bits_queued: bits.clone().count(),
        bits_sent: bits.clone().filter(|(_, b)| b.encoded_at.is_some()).count(),
        bits_delivered: bits.clone().filter(|(r, b)| b.decoded_at.contains_key(r)).count(),
        last_delivery: bits.filter_map(|(r, b)| b.decoded_at.get(&r).copied()).max(),
        steps_used: trace
            .records
            .windows(2)
            .filter(|w| w[0].positions != w[1].positions)
            .map(|w| w[1].t)
            .max()
            .unwrap_or(0),
        distance_travelled,
        verdicts_passed: verdicts.len() - failed,
        verdicts_failed: failed,
        passed: failed == 0,
    }
}

/// A finished scenario run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub trace: Trace,
    pub verdicts: Vec<Verdict>,
    pub summary: Summary,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.summary.passed
    }

    /// Writes `trace.jsonl`, `verdicts.json` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ScenarioError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| ScenarioError::Write { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join("trace.jsonl");
        let file = fs::File::create(&path).map_err(io(&path))?;
        write_trace(&self.trace, BufWriter::new(file))?;
        write_json(&dir.join("verdicts.json"), &self.verdicts)?;
        write_json(&dir.join("summary.json"), &self.summary)?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ScenarioError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| ScenarioError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Runs the scenario to its horizon and checks the trace.
pub fn run_scenario(scenario: &Scenario) -> Result<Outcome, ScenarioError> {
    let mut session = scenario.session(Mutations::default())?;
    let script = scenario.script();
    session
        .run_script(&script, scenario.horizon)
        .map_err(|e| with_message_index(e, &script, &session))?;
    let trace = session.into_trace();
    let verdicts = monitor_suite(&trace);
    let summary = summarize(scenario, &trace, &verdicts);
    Ok(Outcome {
        trace,
        verdicts,
        summary,
    })
}

/// Runs every schedule up to the scenario's horizon. Messages are all
/// queued at instant 0 whatever their `at`.
pub fn explore_scenario(scenario: &Scenario, mutations: Mutations) -> Result<ExploreReport, ScenarioError> {
    let mut session = scenario.session(mutations)?;
    let script: Vec<ScriptedMessage> = scenario
        .script()
        .into_iter()
        .map(|m| ScriptedMessage { at: 0, ..m })
        .collect();
    session
        .run_script(&script, 0)
        .map_err(|e| with_message_index(e, &script, &session))?;
    Ok(explore_schedules(
        &session,
        scenario.horizon,
        scenario.explore_budget.unwrap_or(DEFAULT_EXPLORE_BUDGET),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"
format_version = 1
protocol = "sync2"
horizon = 20

[schedule]
kind = "synchronous"

[[robots]]
position = [0.0, 0.0]
sigma = 1.0

[[robots]]
position = [0.0, 8.0]
sigma = 0.5

[[messages]]
sender = 0
recipient = 1
bits = "1011"
"#;

    #[test]
    fn parses_and_runs() {
        let s = Scenario::from_toml(TWO).unwrap();
        let out = run_scenario(&s).unwrap();
        assert!(out.passed(), "{:?}", out.verdicts);
        assert_eq!(out.summary.bits_delivered, 4);
        // Bit k leaves at 2k and is seen at 2k + 1.
        assert_eq!(out.summary.last_delivery, Some(7));
    }

    #[test]
    fn duplicate_positions_name_the_pair() {
        let text = TWO.replace("[0.0, 8.0]", "[0.0, 0.0]");
        let err = Scenario::from_toml(&text).unwrap().validate().unwrap_err();
        assert!(matches!(err, ScenarioError::DuplicatePosition(0, 1)));
        assert!(err.to_string().contains("robots 0 and 1"));
    }

    #[test]
    fn protocol_assumptions_are_checked() {
        let text = TWO.replace("kind = \"synchronous\"", "kind = \"random_fair\"");
        let err = Scenario::from_toml(&text).unwrap().validate().unwrap_err();
        assert!(matches!(err, ScenarioError::NeedsSynchronous("sync2")));

        let text = TWO.replace("protocol = \"sync2\"", "protocol = \"sync_n_id\"");
        let err = Scenario::from_toml(&text).unwrap().validate().unwrap_err();
        assert!(matches!(err, ScenarioError::MissingVisibleIds(_)));

        let text = TWO.replace("bits = \"1011\"", "bits = \"10a1\"");
        let err = Scenario::from_toml(&text).unwrap().validate().unwrap_err();
        assert!(matches!(err, ScenarioError::Message { index: 0, .. }));

        let text = TWO.replace("format_version = 1", "format_version = 2");
        assert!(matches!(
            Scenario::from_toml(&text).unwrap().validate(),
            Err(ScenarioError::Version(2))
        ));
    }

    #[test]
    fn self_addressed_message_is_rejected() {
        let text = TWO.replace("recipient = 1", "recipient = 0");
        let err = run_scenario(&Scenario::from_toml(&text).unwrap()).unwrap_err();
        assert!(matches!(err, ScenarioError::Message { index: 0, .. }), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = TWO.replace("horizon = 20", "horizon = 20\nhorizn = 3");
        assert!(matches!(Scenario::from_toml(&text), Err(ScenarioError::Parse(_))));
    }
}
