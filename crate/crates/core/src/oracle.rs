//! Exhaustive reference optimizer for small instances.
//!
//! Enumerates, per need, every combination of `required_sessions` distinct
//! bookable slots of the need's visit type, takes the cartesian product over
//! needs, keeps the candidates accepted by [`check_all`] and scores them with
//! [`score_schedule`]. Nothing from the search solver is reused.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{check_all, CheckMode, ScheduleError};
use crate::domain::{Appointment, AvailabilitySlot, Instance};
use crate::objective::{score_schedule, ObjectiveWeights, ScoreError};

pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance-too-large: {candidates} candidate schedules exceed cap {cap}")]
    TooLarge { candidates: u128, cap: u128 },
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    /// `None` when no feasible schedule exists.
    pub optimum: Option<i64>,
    /// Every optimal schedule as a sorted appointment list, in ascending
    /// lexicographic order.
    pub optimal: Vec<Vec<Appointment>>,
    pub feasible_count: u64,
    pub enumerated: u64,
}

impl OracleResult {
    pub fn lex_smallest(&self) -> Option<&[Appointment]> {
        self.optimal.first().map(Vec::as_slice)
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Candidate count the oracle would face: product over sessions of the
/// number of slots matching each session's visit type.
pub fn search_space(inst: &Instance) -> u128 {
    let now = inst.current_time.or_else(|| inst.min_slot_time()).unwrap_or(0);
    let mut total: u128 = 1;
    for p in inst.patients.values() {
        for n in &p.needs {
            let c = inst
                .slots
                .iter()
                .filter(|s| s.visit == n.visit && s.time >= now)
                .count() as u128;
            for _ in 0..inst.required_sessions(&n.visit) {
                total = total.saturating_mul(c);
            }
        }
    }
    total
}

pub fn enumerate_optimal(
    inst: &Instance,
    weights: &ObjectiveWeights,
    mode: CheckMode,
    cap: u128,
) -> Result<OracleResult, OracleError> {
    let space = search_space(inst);
    if space > cap {
        return Err(OracleError::TooLarge { candidates: space, cap });
    }
    let now = inst.current_time.or_else(|| inst.min_slot_time()).unwrap_or(0);
    let mut slots: Vec<&AvailabilitySlot> = inst.slots.iter().filter(|s| s.time >= now).collect();
    slots.sort();
    slots.dedup();

    // Per need: list of alternative appointment groups.
    let mut domains: Vec<Vec<Vec<Appointment>>> = Vec::new();
    for p in inst.patients.values() {
        for n in &p.needs {
            let matching: Vec<&AvailabilitySlot> = slots.iter().copied().filter(|s| s.visit == n.visit).collect();
            let k = inst.required_sessions(&n.visit) as usize;
            let groups = combinations(matching.len(), k)
                .into_iter()
                .map(|ix| {
                    ix.into_iter()
                        .map(|i| Appointment::at(p.id.clone(), matching[i]))
                        .collect()
                })
                .collect();
            domains.push(groups);
        }
    }

    let mut result = OracleResult {
        optimum: None,
        optimal: Vec::new(),
        feasible_count: 0,
        enumerated: 0,
    };
    let mut pick = vec![0usize; domains.len()];
    if domains.iter().any(Vec::is_empty) {
        return Ok(result);
    }
    loop {
        let mut appts: Vec<Appointment> = pick
            .iter()
            .enumerate()
            .flat_map(|(d, &i)| domains[d][i].iter().cloned())
            .collect();
        appts.sort();
        result.enumerated += 1;
        if check_all(inst, &appts, mode)?.is_empty() {
            result.feasible_count += 1;
            let cost = score_schedule(inst, &appts, weights)?.objective;
            match result.optimum {
                Some(best) if cost > best => {}
                Some(best) if cost == best => result.optimal.push(appts),
                _ => {
                    result.optimum = Some(cost);
                    result.optimal = vec![appts];
                }
            }
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == pick.len() {
                result.optimal.sort();
                result.optimal.dedup();
                return Ok(result);
            }
            pick[d] += 1;
            if pick[d] < domains[d].len() {
                break;
            }
            pick[d] = 0;
            d += 1;
        }
    }
}
