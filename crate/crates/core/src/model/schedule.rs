use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EngineError;

/// Default fairness window for randomized schedules.
pub const DEFAULT_WINDOW: usize = 8;

/// Which robots are active at each instant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationSchedule {
    /// Every robot at every instant.
    Synchronous,
    /// Each robot independently active with probability 1/2, never idle for
    /// `window` consecutive instants, and at least one robot per instant.
    RandomFair { seed: u64, window: usize },
    /// Active sets listed instant by instant.
    Explicit { sets: Vec<Vec<usize>> },
}

impl ActivationSchedule {
    /// Length of the longest window without activation that the schedule
    /// rules out, when it guarantees one.
    pub fn fairness_window(&self) -> Option<usize> {
        match self {
            ActivationSchedule::Synchronous => Some(1),
            ActivationSchedule::RandomFair { window, .. } => Some(*window),
            ActivationSchedule::Explicit { .. } => None,
        }
    }

    pub fn is_synchronous(&self) -> bool {
        matches!(self, ActivationSchedule::Synchronous)
    }

    pub fn scheduler(&self, robots: usize) -> Result<Scheduler, EngineError> {
        match self {
            ActivationSchedule::RandomFair { window, .. } if *window == 0 => {
                return Err(EngineError::InvalidSchedule("fairness window must be positive".into()))
            }
            ActivationSchedule::Explicit { sets } => {
                if let Some(t) = sets.iter().position(|s| s.is_empty()) {
                    return Err(EngineError::InvalidSchedule(format!("empty active set at instant {t}")));
                }
                if let Some(&r) = sets.iter().flatten().find(|&&r| r >= robots) {
                    return Err(EngineError::UnknownRobot(r));
                }
            }
            _ => {}
        }
        let rng = match self {
            ActivationSchedule::RandomFair { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Ok(Scheduler {
            schedule: self.clone(),
            robots,
            rng,
            idle: vec![0; robots],
            t: 0,
        })
    }
}

/// Stateful generator of active sets.
#[derive(Clone, Debug)]
pub struct Scheduler {
    schedule: ActivationSchedule,
    robots: usize,
    rng: Option<ChaCha8Rng>,
    idle: Vec<usize>,
    t: usize,
}

impl Scheduler {
    /// Active set for the next instant, sorted ascending.
    pub fn next_active(&mut self) -> Result<Vec<usize>, EngineError> {
        let t = self.t;
        let set = match &self.schedule {
            ActivationSchedule::Synchronous => (0..self.robots).collect(),
            ActivationSchedule::Explicit { sets } => {
                let mut s = sets
                    .get(t)
                    .cloned()
                    .ok_or(EngineError::ScheduleExhausted(t))?;
                s.sort_unstable();
                s.dedup();
                s
            }
            ActivationSchedule::RandomFair { window, .. } => {
                let window = *window;
                let rng = self.rng.as_mut().expect("random schedule carries an rng");
                let mut set: Vec<usize> = (0..self.robots)
                    .filter(|&r| self.idle[r] + 1 >= window || rng.random_bool(0.5))
                    .collect();
                if set.is_empty() {
                    set.push(rng.random_range(0..self.robots));
                }
                set
            }
        };
        for r in 0..self.robots {
            if set.binary_search(&r).is_ok() {
                self.idle[r] = 0;
            } else {
                self.idle[r] += 1;
            }
        }
        self.t += 1;
        Ok(set)
    }
}
