//! Exact branch-and-bound optimizer and a first-available greedy baseline.
//!
//! One decision variable exists per required session of each need; its
//! domain is the set of availability slots for the need's visit that are not
//! in the past and that pass the accessibility and modality rules for that
//! patient (filtered up front). The remaining hard constraints (double
//! booking, budget running sums, session spacing, urgency order and, in
//! strict mode, overlaps) are propagated as sessions are assigned.
//!
//! The exact search is a best-first branch and bound over a relaxation.
//! Needs of different visit types never compete for a slot, so each visit
//! type forms a group whose relaxation is a min-cost transportation problem
//! (needs supply sessions, slots take at most one). The relaxation keeps
//! double booking exact and drops everything else. When the relaxed optimum
//! breaks a rule, a small conflicting set of assignments (a nogood) is
//! extracted and the node is split so that each child forbids one member of
//! the set while keeping the earlier ones.
//!
//! 1. nodes are expanded in order of relaxed bound until the bound reaches
//!    the incumbent, which proves the optimum.
//! 2. among schedules with that optimum, the lexicographically smallest
//!    sorted appointment list is built position by position, testing each
//!    candidate with the same bound and a feasibility search.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use web_time::Instant;

use crate::constraints::CheckMode;
use crate::domain::{
    Appointment, AvailabilitySlot, Instance, PatientId, Schedule, SessionInterval, VisitId, SECONDS_PER_DAY,
};
use crate::flow;
use crate::objective::{self, ObjectiveWeights, ScoreError};
use crate::validate::{validate_instance, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Feasible and proven minimal.
    Optimal,
    /// A feasible schedule without an optimality proof (search budget ran
    /// out, or the greedy baseline), or no schedule found before the budget
    /// ran out.
    FeasibleTimeout,
    /// No schedule satisfies the hard constraints. For the greedy baseline
    /// this only means the greedy pass got stuck.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub schedule: Option<Schedule>,
    /// Objective accumulated incrementally during search.
    pub objective: Option<i64>,
    pub nodes_explored: u64,
    #[serde(with = "duration_secs")]
    pub elapsed: Duration,
    /// Total size of all per-need candidate lists after up-front filtering.
    pub candidates: usize,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid instance: {} issue(s), first: {}", .0.errors().count(), .0.errors().next().map(|i| format!("{} {}", i.code, i.fact)).unwrap_or_default())]
    InvalidInstance(ValidationReport),
    #[error("time budget must be positive")]
    NonPositiveBudget,
    #[error("objective weights must be non-negative")]
    NegativeWeights,
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub weights: ObjectiveWeights,
    pub time_budget: Duration,
    pub mode: CheckMode,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            weights: ObjectiveWeights::default(),
            time_budget: Duration::from_secs(60),
            mode: CheckMode::Faithful,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    need: usize,
    slot: usize,
    score: i64,
}

#[derive(Debug, Clone, Copy)]
struct Cand {
    slot: usize,
    score: i64,
}

#[derive(Debug)]
struct SlotRec {
    slot: AvailabilitySlot,
    clinic: usize,
    doctor: usize,
    triple: usize,
    chronic_cost: u64,
}

#[derive(Debug)]
struct NeedRec {
    patient: usize,
    visit: VisitId,
    urgency: u8,
    sessions: usize,
    interval: Option<SessionInterval>,
    /// Sorted by (score, slot index).
    cands: Vec<Cand>,
}

/// Indexed view of an instance, shared by the exact and greedy solvers.
struct Model {
    patients: Vec<PatientId>,
    slots: Vec<SlotRec>,
    needs: Vec<NeedRec>,
    /// All (need, slot) candidates; those of need `n` are `offsets[n]..offsets[n + 1]`.
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    /// Needs grouped by visit type; groups never compete for slots.
    groups: Vec<Vec<usize>>,
    need_group: Vec<usize>,
    /// Position of a slot among the slots of its (clinic, doctor, visit) triple.
    slot_rank: Vec<usize>,
    budgets: Vec<Option<u64>>,
    n_doctors: usize,
    n_triples: usize,
    mode: CheckMode,
}

impl Model {
    fn build(inst: &Instance, opts: &SolveOptions) -> Result<Model, SolveError> {
        let now = inst.current_time.or_else(|| inst.min_slot_time()).unwrap_or(0);

        let mut raw: Vec<&AvailabilitySlot> = inst.slots.iter().filter(|s| s.time >= now).collect();
        raw.sort();
        raw.dedup();

        let mut clinic_ix: HashMap<&str, usize> = HashMap::new();
        let mut doctor_ix: HashMap<&str, usize> = HashMap::new();
        let mut triple_ix: HashMap<(&str, &str, &str), usize> = HashMap::new();
        let mut budgets = Vec::new();
        let mut slots = Vec::with_capacity(raw.len());
        for s in raw {
            let clinic = *clinic_ix.entry(s.clinic.as_str()).or_insert_with(|| {
                budgets.push(inst.clinic(&s.clinic).and_then(|c| c.budget));
                budgets.len() - 1
            });
            let n = doctor_ix.len();
            let doctor = *doctor_ix.entry(s.doctor.as_str()).or_insert(n);
            let n = triple_ix.len();
            let triple = *triple_ix
                .entry((s.clinic.as_str(), s.doctor.as_str(), s.visit.as_str()))
                .or_insert(n);
            let chronic_cost = inst.visit_type(&s.visit).filter(|v| v.chronic).map_or(0, |v| v.cost);
            slots.push(SlotRec {
                slot: s.clone(),
                clinic,
                doctor,
                triple,
                chronic_cost,
            });
        }

        let mut patient_list: Vec<&crate::domain::Patient> =
            inst.patients.values().filter(|p| !p.needs.is_empty()).collect();
        patient_list.sort_by(|a, b| a.id.cmp(&b.id));

        let mut patients = Vec::new();
        let mut needs = Vec::new();
        for (pi, p) in patient_list.iter().enumerate() {
            patients.push(p.id.clone());
            let mut pneeds: Vec<_> = p.needs.iter().collect();
            pneeds.sort();
            for n in pneeds {
                let visit = inst.visit_type(&n.visit);
                let mut cands = Vec::new();
                for (si, rec) in slots.iter().enumerate() {
                    if rec.slot.visit != n.visit {
                        continue;
                    }
                    let Some(clinic) = inst.clinic(&rec.slot.clinic) else {
                        continue;
                    };
                    if p.disabled && !clinic.accessible {
                        continue;
                    }
                    if visit.is_some_and(|v| !v.allows(&clinic.modality)) {
                        continue;
                    }
                    let appt = Appointment::at(p.id.clone(), &rec.slot);
                    let score = objective::score_appointment_at(inst, &appt, &opts.weights, now)?.total();
                    cands.push(Cand { slot: si, score });
                }
                cands.sort_by_key(|c| (c.score, c.slot));
                needs.push(NeedRec {
                    patient: pi,
                    visit: n.visit.clone(),
                    urgency: n.urgency.level(),
                    sessions: inst.required_sessions(&n.visit) as usize,
                    interval: inst.session_interval(&p.id, &n.visit),
                    cands,
                });
            }
        }

        let mut edges = Vec::new();
        let mut offsets = Vec::with_capacity(needs.len() + 1);
        let mut group_ix: BTreeMap<&VisitId, usize> = BTreeMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut need_group = Vec::with_capacity(needs.len());
        for (ni, n) in needs.iter().enumerate() {
            offsets.push(edges.len());
            edges.extend(n.cands.iter().map(|c| Edge {
                need: ni,
                slot: c.slot,
                score: c.score,
            }));
            let next = groups.len();
            let g = *group_ix.entry(&n.visit).or_insert(next);
            if g == groups.len() {
                groups.push(Vec::new());
            }
            groups[g].push(ni);
            need_group.push(g);
        }
        offsets.push(edges.len());
        let mut slot_rank = vec![0; slots.len()];
        for i in 1..slots.len() {
            if slots[i].triple == slots[i - 1].triple {
                slot_rank[i] = slot_rank[i - 1] + 1;
            }
        }

        Ok(Model {
            patients,
            edges,
            offsets,
            groups,
            need_group,
            slot_rank,
            n_doctors: doctor_ix.len(),
            n_triples: triple_ix.len(),
            slots,
            needs,
            budgets,
            mode: opts.mode,
        })
    }

    fn candidate_count(&self) -> usize {
        self.needs.iter().map(|n| n.cands.len()).sum()
    }
}

/// Mutable search state with incremental constraint bookkeeping.
#[derive(Clone)]
struct State {
    used: Vec<bool>,
    spend: Vec<u64>,
    triple_load: Vec<Vec<(i64, u8)>>,
    assigned: Vec<Vec<usize>>,
    patient_busy: HashMap<(usize, i64), u32>,
    doctor_busy: HashMap<(usize, i64), u32>,
    cost: i64,
}

fn day_gap(a: i64, b: i64) -> i64 {
    (a - b).abs().div_euclid(SECONDS_PER_DAY)
}

impl State {
    fn new(m: &Model) -> State {
        State {
            used: vec![false; m.slots.len()],
            spend: vec![0; m.budgets.len()],
            triple_load: vec![Vec::new(); m.n_triples],
            assigned: vec![Vec::new(); m.needs.len()],
            patient_busy: HashMap::new(),
            doctor_busy: HashMap::with_capacity(m.n_doctors),
            cost: 0,
        }
    }

    /// Whether `slot` can be given to the next session of `need`. With
    /// `time_ordered`, sessions of a need are assigned in time order so the
    /// new one directly follows the last assigned one.
    fn can_assign(&self, m: &Model, need: usize, slot: usize, time_ordered: bool) -> bool {
        if self.used[slot] {
            return false;
        }
        let rec = &m.slots[slot];
        let n = &m.needs[need];
        let t = rec.slot.time;
        if let Some(budget) = m.budgets[rec.clinic] {
            if self.spend[rec.clinic] + rec.chronic_cost > budget {
                return false;
            }
        }
        for &(other_t, other_u) in &self.triple_load[rec.triple] {
            if (n.urgency > other_u && t > other_t) || (other_u > n.urgency && other_t > t) {
                return false;
            }
        }
        if m.mode == CheckMode::Strict
            && (self.patient_busy.get(&(n.patient, t)).copied().unwrap_or(0) > 0
                || self.doctor_busy.get(&(rec.doctor, t)).copied().unwrap_or(0) > 0)
        {
            return false;
        }
        if let Some(iv) = n.interval {
            let prior = &self.assigned[need];
            if time_ordered {
                if let Some(&last) = prior.last() {
                    let gap = day_gap(t, m.slots[last].slot.time);
                    if gap < i64::from(iv.min_days) || gap > i64::from(iv.max_days) {
                        return false;
                    }
                }
            } else {
                if prior
                    .iter()
                    .any(|&s| day_gap(t, m.slots[s].slot.time) < i64::from(iv.min_days))
                {
                    return false;
                }
                if prior.len() + 1 == n.sessions && !spacing_ok(m, prior, slot, iv) {
                    return false;
                }
            }
        }
        true
    }

    fn assign(&mut self, m: &Model, need: usize, slot: usize, score: i64) {
        let rec = &m.slots[slot];
        let n = &m.needs[need];
        self.used[slot] = true;
        self.spend[rec.clinic] += rec.chronic_cost;
        self.triple_load[rec.triple].push((rec.slot.time, n.urgency));
        self.assigned[need].push(slot);
        if m.mode == CheckMode::Strict {
            *self.patient_busy.entry((n.patient, rec.slot.time)).or_insert(0) += 1;
            *self.doctor_busy.entry((rec.doctor, rec.slot.time)).or_insert(0) += 1;
        }
        self.cost += score;
    }

    fn appointments(&self, m: &Model) -> Vec<Appointment> {
        let mut out = Vec::new();
        for (ni, slots) in self.assigned.iter().enumerate() {
            let pid = &m.patients[m.needs[ni].patient];
            for &s in slots {
                out.push(Appointment::at(pid.clone(), &m.slots[s].slot));
            }
        }
        out.sort();
        out
    }
}

fn spacing_ok(m: &Model, prior: &[usize], extra: usize, iv: SessionInterval) -> bool {
    let mut times: Vec<i64> = prior
        .iter()
        .chain(std::iter::once(&extra))
        .map(|&s| m.slots[s].slot.time)
        .collect();
    times.sort_unstable();
    times.windows(2).all(|w| {
        let g = day_gap(w[1], w[0]);
        g >= i64::from(iv.min_days) && g <= i64::from(iv.max_days)
    })
}

struct Clock {
    start: Instant,
    budget: Duration,
    nodes: u64,
    expired: bool,
}

impl Clock {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if !self.expired && self.start.elapsed() > self.budget {
            self.expired = true;
        }
        self.expired
    }
}

#[derive(Clone)]
struct EdgeSet(Vec<u64>);

impl EdgeSet {
    fn with_len(n: usize) -> Self {
        EdgeSet(vec![0; n.div_ceil(64)])
    }

    fn contains(&self, e: usize) -> bool {
        (self.0[e / 64] >> (e % 64)) & 1 == 1
    }

    fn insert(&mut self, e: usize) {
        self.0[e / 64] |= 1 << (e % 64);
    }
}

/// Relaxation of a search node: fixed edges plus the per-visit-type optimal
/// assignment of every open session.
struct Eval {
    lb: i64,
    group_cost: Vec<i64>,
    assignment: Vec<usize>,
    /// Open edges of a violated rule; `None` when the assignment is feasible.
    nogood: Option<Vec<usize>>,
}

impl Model {
    fn fixed_state(&self, fixed: &[usize]) -> Option<State> {
        let mut st = State::new(self);
        for &e in fixed {
            let ed = self.edges[e];
            if !st.can_assign(self, ed.need, ed.slot, false) {
                return None;
            }
            st.assign(self, ed.need, ed.slot, ed.score);
        }
        Some(st)
    }

    /// Cheapest way to give every open session of visit group `g` a distinct
    /// slot compatible with the fixed part. Urgency times slot rank is added
    /// as a tie-break below the unit of the objective, so among equal-cost
    /// assignments the urgency-consistent one is preferred.
    fn relax_group(&self, st: &State, excluded: &EdgeSet, g: usize) -> Option<(i64, Vec<usize>)> {
        let mut demands = Vec::new();
        let mut col_of: HashMap<usize, usize> = HashMap::new();
        let mut flow_edges = Vec::new();
        let mut edge_ids = Vec::new();
        for &n in &self.groups[g] {
            let rem = self.needs[n].sessions - st.assigned[n].len();
            if rem == 0 {
                continue;
            }
            let row = demands.len();
            demands.push(rem);
            for e in self.offsets[n]..self.offsets[n + 1] {
                let ed = self.edges[e];
                if excluded.contains(e) || !st.can_assign(self, n, ed.slot, false) {
                    continue;
                }
                let next = col_of.len();
                let col = *col_of.entry(ed.slot).or_insert(next);
                flow_edges.push((row, col, ed));
                edge_ids.push(e);
            }
        }
        let units: usize = demands.iter().sum();
        if units == 0 {
            return Some((0, Vec::new()));
        }
        let unit = 3 * (self.slots.len() as i128 + 1) * (units as i128 + 1) + 1;
        let weighted: Vec<(usize, usize, i128)> = flow_edges
            .iter()
            .map(|&(r, c, ed)| {
                let tie = i128::from(self.needs[ed.need].urgency) * self.slot_rank[ed.slot] as i128;
                (r, c, i128::from(ed.score) * unit + tie)
            })
            .collect();
        let (_, used) = flow::min_cost_transport(&demands, col_of.len(), &weighted)?;
        let chosen: Vec<usize> = used.into_iter().map(|i| edge_ids[i]).collect();
        let cost = chosen.iter().map(|&e| self.edges[e].score).sum();
        Some((cost, chosen))
    }

    fn evaluate(&self, fixed: &[usize], excluded: &EdgeSet) -> Option<Eval> {
        let st = self.fixed_state(fixed)?;
        let mut lb = st.cost;
        let mut group_cost = Vec::with_capacity(self.groups.len());
        let mut assignment = fixed.to_vec();
        for g in 0..self.groups.len() {
            let (c, chosen) = self.relax_group(&st, excluded, g)?;
            lb += c;
            group_cost.push(c);
            assignment.extend(chosen);
        }
        let nogood = match self.find_nogood(&assignment) {
            Some(members) => {
                let open: Vec<usize> = members.into_iter().filter(|e| !fixed.contains(e)).collect();
                if open.is_empty() {
                    return None;
                }
                Some(open)
            }
            None => None,
        };
        Some(Eval {
            lb,
            group_cost,
            assignment,
            nogood,
        })
    }

    /// Edges of a complete assignment that cannot all hold together, or
    /// `None` when every hard rule is met.
    fn find_nogood(&self, assignment: &[usize]) -> Option<Vec<usize>> {
        let time = |e: usize| self.slots[self.edges[e].slot].slot.time;

        let mut by_triple: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut by_need: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut by_clinic: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &e in assignment {
            let ed = self.edges[e];
            by_triple.entry(self.slots[ed.slot].triple).or_default().push(e);
            by_need.entry(ed.need).or_default().push(e);
            by_clinic.entry(self.slots[ed.slot].clinic).or_default().push(e);
        }

        for list in by_triple.values_mut() {
            list.sort_by_key(|&e| time(e));
            for (i, &early) in list.iter().enumerate() {
                for &late in &list[i + 1..] {
                    if self.needs[self.edges[late].need].urgency > self.needs[self.edges[early].need].urgency {
                        return Some(vec![late, early]);
                    }
                }
            }
        }

        for (&n, list) in by_need.iter_mut() {
            let Some(iv) = self.needs[n].interval else { continue };
            list.sort_by_key(|&e| time(e));
            for (i, &a) in list.iter().enumerate() {
                for &b in &list[i + 1..] {
                    if day_gap(time(b), time(a)) < i64::from(iv.min_days) {
                        return Some(vec![b, a]);
                    }
                }
            }
            for w in list.windows(2) {
                if day_gap(time(w[1]), time(w[0])) > i64::from(iv.max_days) {
                    return Some(if list.len() == 2 {
                        vec![w[1], w[0]]
                    } else {
                        list.clone()
                    });
                }
            }
        }

        for (&c, list) in &by_clinic {
            let Some(budget) = self.budgets[c] else { continue };
            let cost = |e: usize| self.slots[self.edges[e].slot].chronic_cost;
            if list.iter().map(|&e| cost(e)).sum::<u64>() <= budget {
                continue;
            }
            let mut sorted = list.clone();
            sorted.sort_by_key(|&e| (std::cmp::Reverse(cost(e)), e));
            let mut sum = 0;
            let mut members = Vec::new();
            for e in sorted {
                sum += cost(e);
                members.push(e);
                if sum > budget {
                    break;
                }
            }
            return Some(members);
        }

        if self.mode == CheckMode::Strict {
            let mut patient_at: BTreeMap<(usize, i64), usize> = BTreeMap::new();
            let mut doctor_at: BTreeMap<(usize, i64), usize> = BTreeMap::new();
            for &e in assignment {
                let ed = self.edges[e];
                let t = time(e);
                if let Some(&other) = patient_at.get(&(self.needs[ed.need].patient, t)) {
                    return Some(vec![e, other]);
                }
                patient_at.insert((self.needs[ed.need].patient, t), e);
                if let Some(&other) = doctor_at.get(&(self.slots[ed.slot].doctor, t)) {
                    return Some(vec![e, other]);
                }
                doctor_at.insert((self.slots[ed.slot].doctor, t), e);
            }
        }
        None
    }

    fn appointments(&self, edges: &[usize]) -> Vec<Appointment> {
        let mut out: Vec<Appointment> = edges
            .iter()
            .map(|&e| {
                let ed = self.edges[e];
                Appointment::at(
                    self.patients[self.needs[ed.need].patient].clone(),
                    &self.slots[ed.slot].slot,
                )
            })
            .collect();
        out.sort();
        out
    }
}

/// Children of a node for nogood `[m1, .., mr]`: child i keeps m1..m(i-1)
/// and forbids mi. They partition the node's feasible set.
fn branch(fixed: &[usize], excluded: &EdgeSet, nogood: &[usize]) -> Vec<(Vec<usize>, EdgeSet)> {
    (0..nogood.len())
        .map(|i| {
            let mut f = fixed.to_vec();
            f.extend_from_slice(&nogood[..i]);
            let mut x = excluded.clone();
            x.insert(nogood[i]);
            (f, x)
        })
        .collect()
}

struct Search<'m> {
    m: &'m Model,
    clock: Clock,
}

impl Search<'_> {
    /// Best-first search for the optimum. Returns the incumbent; the proof is
    /// complete unless the clock expired.
    fn optimize(&mut self) -> Option<(i64, Vec<usize>)> {
        let m = self.m;
        let mut best: Option<(i64, Vec<usize>)> = None;
        let mut heap: BinaryHeap<Reverse<(i64, u64)>> = BinaryHeap::new();
        let mut open: HashMap<u64, (Vec<usize>, EdgeSet, Vec<usize>)> = HashMap::new();
        let mut seq = 0u64;
        let mut pending = vec![(Vec::new(), EdgeSet::with_len(m.edges.len()))];
        loop {
            for (f, x) in pending.drain(..) {
                if self.clock.tick() {
                    return best;
                }
                let Some(ev) = m.evaluate(&f, &x) else { continue };
                if best.as_ref().is_some_and(|(b, _)| ev.lb >= *b) {
                    continue;
                }
                match ev.nogood {
                    None => best = Some((ev.lb, ev.assignment)),
                    Some(ng) => {
                        heap.push(Reverse((ev.lb, seq)));
                        open.insert(seq, (f, x, ng));
                        seq += 1;
                    }
                }
            }
            let Some(Reverse((lb, id))) = heap.pop() else { break };
            if best.as_ref().is_some_and(|(b, _)| lb >= *b) {
                break;
            }
            let (f, x, ng) = open.remove(&id).expect("queued node");
            pending = branch(&f, &x, &ng);
        }
        best
    }

    /// Depth-first search for any completion of `fixed` with cost at most `target`.
    fn exists(&mut self, fixed: Vec<usize>, excluded: EdgeSet, target: i64) -> Option<Vec<usize>> {
        let m = self.m;
        let mut stack = vec![(fixed, excluded)];
        while let Some((f, x)) = stack.pop() {
            if self.clock.tick() {
                return None;
            }
            let Some(ev) = m.evaluate(&f, &x) else { continue };
            if ev.lb > target {
                continue;
            }
            match ev.nogood {
                None => return Some(ev.assignment),
                Some(ng) => stack.extend(branch(&f, &x, &ng).into_iter().rev()),
            }
        }
        None
    }

    /// Lexicographically smallest schedule of cost `target`: patients in id
    /// order, each patient's appointments from the smallest slot up, each
    /// position taking the smallest slot that still admits a completion of
    /// cost `target`.
    fn lex_refine(&mut self, target: i64) -> Option<Vec<usize>> {
        let m = self.m;
        let mut fixed: Vec<usize> = Vec::new();
        let mut excluded = EdgeSet::with_len(m.edges.len());
        let mut base = m.evaluate(&fixed, &excluded)?;
        let mut base_state = m.fixed_state(&fixed)?;
        for p in 0..m.patients.len() {
            let mut own: Vec<usize> = (0..m.needs.len())
                .filter(|&n| m.needs[n].patient == p)
                .flat_map(|n| m.offsets[n]..m.offsets[n + 1])
                .collect();
            own.sort_by_key(|&e| m.edges[e].slot);
            let positions: usize = (0..m.needs.len())
                .filter(|&n| m.needs[n].patient == p)
                .map(|n| m.needs[n].sessions)
                .sum();
            let mut last: Option<usize> = None;
            for _ in 0..positions {
                let mut placed = false;
                for &e in &own {
                    let ed = m.edges[e];
                    if last.is_some_and(|l| ed.slot <= l) || excluded.contains(e) {
                        continue;
                    }
                    if base_state.assigned[ed.need].len() == m.needs[ed.need].sessions {
                        continue;
                    }
                    let ok = self.admits(&fixed, &excluded, &base_state, &base, e, target);
                    if self.clock.expired {
                        return None;
                    }
                    if ok {
                        fixed.push(e);
                        last = Some(ed.slot);
                        base_state = m.fixed_state(&fixed)?;
                        base = m.evaluate(&fixed, &excluded)?;
                        placed = true;
                        break;
                    }
                    excluded.insert(e);
                }
                if !placed {
                    return None;
                }
            }
        }
        Some(fixed)
    }

    fn admits(&mut self, fixed: &[usize], excluded: &EdgeSet, st: &State, base: &Eval, e: usize, target: i64) -> bool {
        let m = self.m;
        let ed = m.edges[e];
        if !st.can_assign(m, ed.need, ed.slot, false) {
            return false;
        }
        let mut st = st.clone();
        st.assign(m, ed.need, ed.slot, ed.score);
        let g = m.need_group[ed.need];
        let Some((cost, _)) = m.relax_group(&st, excluded, g) else {
            return false;
        };
        let others: i64 = base
            .group_cost
            .iter()
            .enumerate()
            .filter(|&(h, _)| h != g)
            .map(|(_, c)| c)
            .sum();
        if st.cost + cost + others > target {
            return false;
        }
        let mut f = fixed.to_vec();
        f.push(e);
        self.exists(f, excluded.clone(), target).is_some()
    }
}

fn check_inputs(inst: &Instance, opts: &SolveOptions) -> Result<(), SolveError> {
    if opts.time_budget.is_zero() {
        return Err(SolveError::NonPositiveBudget);
    }
    if !opts.weights.is_valid() {
        return Err(SolveError::NegativeWeights);
    }
    let report = validate_instance(inst);
    if !report.is_valid() {
        return Err(SolveError::InvalidInstance(report));
    }
    Ok(())
}

fn finish(
    inst: &Instance,
    opts: &SolveOptions,
    m: &Model,
    status: SolveStatus,
    appts: Option<(Vec<Appointment>, i64)>,
    nodes: u64,
    start: Instant,
) -> Result<SolveResult, SolveError> {
    let (schedule, objective) = match appts {
        Some((list, cost)) => (Some(objective::score_schedule(inst, &list, &opts.weights)?), Some(cost)),
        None => (None, None),
    };
    Ok(SolveResult {
        status,
        schedule,
        objective,
        nodes_explored: nodes,
        elapsed: start.elapsed(),
        candidates: m.candidate_count(),
    })
}

/// Finds a feasible schedule of minimum objective.
///
/// Co-optimal schedules are broken by the lexicographic order of their sorted
/// appointment lists, smallest first, so the answer does not depend on fact
/// order.
pub fn solve_exact(inst: &Instance, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    check_inputs(inst, opts)?;
    let m = Model::build(inst, opts)?;
    let mut search = Search {
        m: &m,
        clock: Clock {
            start,
            budget: opts.time_budget,
            nodes: 0,
            expired: false,
        },
    };
    let best = search.optimize();
    if search.clock.expired {
        let found = best.map(|(cost, edges)| (m.appointments(&edges), cost));
        return finish(
            inst,
            opts,
            &m,
            SolveStatus::FeasibleTimeout,
            found,
            search.clock.nodes,
            start,
        );
    }
    let Some((cost, edges)) = best else {
        return finish(inst, opts, &m, SolveStatus::Infeasible, None, search.clock.nodes, start);
    };
    // budget exhaustion during the tie-break keeps the (optimal) first answer
    let chosen = search.lex_refine(cost).unwrap_or(edges);
    finish(
        inst,
        opts,
        &m,
        SolveStatus::Optimal,
        Some((m.appointments(&chosen), cost)),
        search.clock.nodes,
        start,
    )
}

/// First-available baseline: needs in input order, each session takes the
/// earliest feasible slot (ties by clinic id, then doctor id). Hard
/// constraints are enforced, preferences and urgency are not considered.
pub fn solve_greedy_first_available(inst: &Instance, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    check_inputs(inst, opts)?;
    let m = Model::build(inst, opts)?;
    let mut st = State::new(&m);
    let mut nodes = 0u64;

    let patient_ix: HashMap<&PatientId, usize> = m.patients.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut input_order = Vec::new();
    for p in inst.patients.values() {
        let Some(&pi) = patient_ix.get(&p.id) else { continue };
        let mut pneeds: Vec<usize> = m
            .needs
            .iter()
            .enumerate()
            .filter(|(_, n)| n.patient == pi)
            .map(|(i, _)| i)
            .collect();
        // model needs are sorted by visit; recover declaration order
        pneeds.sort_by_key(|&ni| p.needs.iter().position(|n| n.visit == m.needs[ni].visit));
        input_order.extend(pneeds);
    }

    for ni in input_order {
        let mut by_time: Vec<Cand> = m.needs[ni].cands.clone();
        by_time.sort_by(|a, b| {
            let (sa, sb) = (&m.slots[a.slot].slot, &m.slots[b.slot].slot);
            (sa.time, &sa.clinic, &sa.doctor).cmp(&(sb.time, &sb.clinic, &sb.doctor))
        });
        for _ in 0..m.needs[ni].sessions {
            let floor = st.assigned[ni].last().map(|&s| m.slots[s].slot.time);
            let pick = by_time.iter().find(|c| {
                nodes += 1;
                floor.is_none_or(|f| m.slots[c.slot].slot.time >= f) && st.can_assign(&m, ni, c.slot, true)
            });
            match pick {
                Some(c) => st.assign(&m, ni, c.slot, c.score),
                None => return finish(inst, opts, &m, SolveStatus::Infeasible, None, nodes, start),
            }
        }
    }
    let appts = st.appointments(&m);
    let cost = st.cost;
    finish(
        inst,
        opts,
        &m,
        SolveStatus::FeasibleTimeout,
        Some((appts, cost)),
        nodes,
        start,
    )
}
