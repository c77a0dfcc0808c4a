use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::monitors::{monitor_suite, Verdict};
use super::{HarnessError, Session};

/// Outcome of running every schedule up to a horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreReport {
    /// Schedules the horizon admits: `(2^n - 1)^horizon`.
    pub total: u128,
    pub explored: u64,
    /// False when the budget cut the enumeration short.
    pub exhaustive: bool,
    /// First failing schedule in enumeration order, with its failed verdicts.
    pub counterexample: Option<(Vec<Vec<usize>>, Vec<Verdict>)>,
    pub verdict: Verdict,
}

/// Number of nonempty active sets for `n` robots.
pub fn subset_count(n: usize) -> usize {
    (1usize << n) - 1
}

fn subset(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Outcome of one branch of the search.
struct Branch {
    explored: u64,
    failure: Option<(u128, Vec<Vec<usize>>, Vec<Verdict>)>,
}

/// Depth-first over all schedules extending `session`'s prefix, leaves
/// numbered from `first`; leaves at or past `limit` are skipped and the
/// search stops at the first failure.
fn search(
    session: &Session,
    depth: usize,
    horizon: usize,
    first: u128,
    limit: u128,
    prefix: &mut Vec<Vec<usize>>,
) -> Result<Branch, HarnessError> {
    if first >= limit {
        return Ok(Branch {
            explored: 0,
            failure: None,
        });
    }
    if depth == horizon {
        let verdicts = monitor_suite(&session.clone().into_trace());
        let failed: Vec<Verdict> = verdicts.into_iter().filter(|v| !v.passed).collect();
        return Ok(Branch {
            explored: 1,
            failure: (!failed.is_empty()).then(|| (first, prefix.clone(), failed)),
        });
    }
    let n = session.robots();
    let fan = subset_count(n) as u128;
    let below = fan.pow((horizon - depth - 1) as u32);
    let mut explored = 0;
    for mask in 1..=subset_count(n) {
        let start = first + (mask as u128 - 1) * below;
        let active = subset(mask, n);
        let mut next = session.clone();
        next.advance_with(&active)?;
        prefix.push(active);
        let branch = search(&next, depth + 1, horizon, start, limit, prefix)?;
        prefix.pop();
        explored += branch.explored;
        if branch.failure.is_some() {
            return Ok(Branch {
                explored,
                failure: branch.failure,
            });
        }
    }
    Ok(Branch {
        explored,
        failure: None,
    })
}

/// Runs `session` (messages already queued) under every sequence of
/// nonempty active sets of length `horizon`, checking each trace with
/// [`monitor_suite`]. At most `budget` schedules are run, in enumeration
/// order; the report says whether that covered all of them.
pub fn explore_schedules(session: &Session, horizon: usize, budget: u64) -> Result<ExploreReport, HarnessError> {
    let n = session.robots();
    let fan = subset_count(n) as u128;
    let total = (0..horizon).fold(1u128, |acc, _| acc.saturating_mul(fan));
    let limit = total.min(budget as u128);

    // Fan the first levels out to the thread pool.
    let split = (0..=horizon).take_while(|&d| fan.pow(d as u32) <= 512).last().unwrap_or(0);
    let below = fan.pow((horizon - split) as u32);
    let roots: Vec<u128> = (0..fan.pow(split as u32)).filter(|i| i * below < limit).collect();
    let branches: Vec<Result<Branch, HarnessError>> = roots
        .par_iter()
        .map(|&root| {
            let mut prefix = Vec::with_capacity(horizon);
            let mut s = session.clone();
            let mut digits = root;
            let mut sets = Vec::with_capacity(split);
            for _ in 0..split {
                sets.push((digits % fan) as usize + 1);
                digits /= fan;
            }
            for &mask in sets.iter().rev() {
                let active = subset(mask, n);
                s.advance_with(&active)?;
                prefix.push(active);
            }
            search(&s, split, horizon, root * below, limit, &mut prefix)
        })
        .collect();

    let mut explored = 0u64;
    let mut counterexample: Option<(u128, Vec<Vec<usize>>, Vec<Verdict>)> = None;
    for b in branches {
        let b = b?;
        explored += b.explored;
        if let Some(f) = b.failure {
            if counterexample.as_ref().is_none_or(|c| f.0 < c.0) {
                counterexample = Some(f);
            }
        }
    }
    let exhaustive = counterexample.is_none() && explored as u128 == total;
    let verdict = match &counterexample {
        Some((index, schedule, failed)) => {
            let names: Vec<&str> = failed.iter().map(|v| v.property.as_str()).collect();
            Verdict {
                property: "explore".to_string(),
                passed: false,
                first_violation: failed.iter().filter_map(|v| v.first_violation).min(),
                detail: format!(
                    "schedule #{index} {schedule:?} fails {}",
                    names.join(", ")
                ),
                evidence: failed.iter().find_map(|v| v.evidence.clone()),
            }
        }
        None if exhaustive => Verdict::pass("explore", format!("all {total} schedules pass")),
        None => Verdict {
            property: "explore".to_string(),
            passed: false,
            first_violation: None,
            detail: format!("partial: budget of {budget} covered {explored} of {total} schedules, all passing"),
            evidence: None,
        },
    };
    Ok(ExploreReport {
        total,
        explored,
        exhaustive,
        counterexample: counterexample.map(|(_, s, v)| (s, v)),
        verdict,
    })
}
