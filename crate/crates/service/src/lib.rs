//! Batch-window booking service.
//!
//! Requests are queued as they arrive and solved together on each tick
//! against the clinic catalog of a base instance. Confirmed appointments are
//! frozen: later batches see their slots as taken and their chronic spend as
//! already charged to the clinic budget.

pub mod http;
mod journal;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use indexmap::IndexMap;
use medsched_core::constraints::CheckMode;
use medsched_core::domain::{Appointment, AvailabilitySlot, ClinicId, Instance, Modality, Patient, PatientId};
use medsched_core::json::{from_json_str, JsonError};
use medsched_core::objective::ObjectiveWeights;
use medsched_core::solver::{solve_exact, SolveOptions};
use medsched_core::validate::{validate_instance, Severity};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use journal::{Event, Journal};

pub type RequestId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    /// Not schedulable even alone on the free slots.
    NoFeasibleSlot,
    /// Schedulable alone, but not together with higher-priority requests.
    CapacityConflict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RequestStatus {
    Queued,
    Solving,
    Scheduled { appointments: Vec<Appointment> },
    Rejected { reason: RejectReason },
}

impl RequestStatus {
    fn rank(&self) -> u8 {
        match self {
            RequestStatus::Queued => 0,
            RequestStatus::Solving => 1,
            RequestStatus::Scheduled { .. } | RequestStatus::Rejected { .. } => 2,
        }
    }

    pub fn is_final(&self) -> bool {
        self.rank() == 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookingRequest {
    pub request_id: RequestId,
    pub patient: Patient,
    pub submitted_at: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
    pub status: RequestStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitPayload {
    pub patient: Patient,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

/// A committed appointment and the request it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Booking {
    pub request_id: RequestId,
    pub appointment: Appointment,
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    Schema(#[from] JsonError),
    #[error("{code}: {message}")]
    Invalid { code: String, message: String },
    #[error("unknown request {0}")]
    UnknownRequest(String),
    #[error("unknown clinic {0}")]
    UnknownClinic(String),
    #[error("invalid base instance: {0}")]
    BaseInstance(String),
    #[error("journal: {0}")]
    Journal(#[from] std::io::Error),
    #[error("journal line {line}: {message}")]
    Replay { line: usize, message: String },
}

impl ServiceError {
    pub fn code(&self) -> &str {
        match self {
            ServiceError::Schema(e) => e.code(),
            ServiceError::Invalid { code, .. } => code,
            ServiceError::UnknownRequest(_) => "unknown-request",
            ServiceError::UnknownClinic(_) => "unknown-clinic",
            ServiceError::BaseInstance(_) => "invalid-base-instance",
            ServiceError::Journal(_) | ServiceError::Replay { .. } => "journal-error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub time_budget: Duration,
    pub mode: CheckMode,
    pub weights: ObjectiveWeights,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            time_budget: Duration::from_secs(5),
            mode: CheckMode::Faithful,
            weights: ObjectiveWeights::default(),
        }
    }
}

/// Everything that survives a restart.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct State {
    pub requests: IndexMap<RequestId, BookingRequest>,
    pub idempotency: BTreeMap<String, RequestId>,
    pub committed: Vec<Booking>,
    pub next_seq: u64,
    pub ticks: u64,
}

impl State {
    fn apply(&mut self, event: &Event) {
        match event {
            Event::Submitted { request } => {
                if let Some(key) = &request.idempotency_key {
                    self.idempotency.insert(key.clone(), request.request_id.clone());
                }
                self.requests.insert(request.request_id.clone(), (**request).clone());
                self.next_seq += 1;
            }
            Event::Tick { outcomes, bookings, .. } => {
                for (id, status) in outcomes {
                    if let Some(r) = self.requests.get_mut(id) {
                        r.status = status.clone();
                    }
                }
                self.committed.extend(bookings.iter().cloned());
                self.ticks += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickReport {
    pub now: i64,
    pub batch_size: usize,
    pub scheduled: Vec<RequestId>,
    pub rejected: Vec<(RequestId, RejectReason)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Availability {
    pub clinic: ClinicId,
    pub modality: Modality,
    /// `false` for home-care and telemedicine clinics, where travel distance counts as 0.
    pub distance_applies: bool,
    pub slots: Vec<AvailabilitySlot>,
}

/// Snapshot of one batch, solvable without holding the scheduler.
#[derive(Debug, Clone)]
pub struct BatchPlan {
    pub now: i64,
    requests: Vec<BookingRequest>,
    catalog: Instance,
    cfg: Config,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchOutcome {
    pub now: i64,
    pub outcomes: Vec<(RequestId, RequestStatus)>,
    pub bookings: Vec<Booking>,
}

impl BatchPlan {
    fn instance_for(&self, members: &[usize]) -> Instance {
        let mut inst = self.catalog.clone();
        for &i in members {
            let r = &self.requests[i];
            let mut p = r.patient.clone();
            p.id = PatientId::new(r.request_id.as_str());
            inst.add_patient(p);
        }
        inst
    }

    fn try_solve(&self, members: &[usize]) -> Option<Vec<Appointment>> {
        if members.is_empty() {
            return Some(Vec::new());
        }
        let inst = self.instance_for(members);
        let opts = SolveOptions {
            weights: self.cfg.weights,
            time_budget: self.cfg.time_budget,
            mode: self.cfg.mode,
        };
        solve_exact(&inst, &opts).ok()?.schedule.map(|s| s.appointments)
    }

    /// Solves the batch. When it cannot be served in full, requests are
    /// dropped from the lowest priority up (urgency, then submission order)
    /// until the rest is feasible, then dropped ones are re-admitted in
    /// priority order wherever they still fit.
    pub fn solve(&self) -> BatchOutcome {
        let all: Vec<usize> = (0..self.requests.len()).collect();
        let (kept, schedule) = match self.try_solve(&all) {
            Some(s) => (all, s),
            None => {
                let mut order = all.clone();
                order.sort_by_key(|&i| {
                    let r = &self.requests[i];
                    (std::cmp::Reverse(r.patient.max_urgency()), r.submitted_at, i)
                });
                let mut kept = order;
                let mut dropped = Vec::new();
                let mut schedule = loop {
                    if let Some(s) = self.try_solve(&kept) {
                        break s;
                    }
                    dropped.push(kept.pop().expect("the empty batch is feasible"));
                };
                for &d in dropped.iter().rev() {
                    let mut trial = kept.clone();
                    trial.push(d);
                    if let Some(s) = self.try_solve(&trial) {
                        kept = trial;
                        schedule = s;
                    }
                }
                (kept, schedule)
            }
        };

        let kept: BTreeSet<usize> = kept.into_iter().collect();
        let mut outcomes = Vec::new();
        let mut bookings = Vec::new();
        for (i, r) in self.requests.iter().enumerate() {
            let status = if kept.contains(&i) {
                let mut appts: Vec<Appointment> = schedule
                    .iter()
                    .filter(|a| a.patient.as_str() == r.request_id)
                    .map(|a| Appointment {
                        patient: r.patient.id.clone(),
                        ..a.clone()
                    })
                    .collect();
                appts.sort();
                bookings.extend(appts.iter().map(|a| Booking {
                    request_id: r.request_id.clone(),
                    appointment: a.clone(),
                }));
                RequestStatus::Scheduled { appointments: appts }
            } else {
                let reason = if self.try_solve(&[i]).is_some() {
                    RejectReason::CapacityConflict
                } else {
                    RejectReason::NoFeasibleSlot
                };
                RequestStatus::Rejected { reason }
            };
            outcomes.push((r.request_id.clone(), status));
        }
        BatchOutcome {
            now: self.now,
            outcomes,
            bookings,
        }
    }
}

pub struct Scheduler {
    base: Instance,
    cfg: Config,
    state: State,
    journal: Option<Journal>,
}

impl Scheduler {
    /// `base` supplies clinics, doctors, visit types and slots; its patients
    /// are ignored.
    pub fn new(mut base: Instance, cfg: Config) -> Result<Self, ServiceError> {
        base.patients.clear();
        let report = validate_instance(&base);
        if let Some(issue) = report.errors().next() {
            return Err(ServiceError::BaseInstance(format!(
                "{} {}",
                issue.code.as_str(),
                issue.fact
            )));
        }
        Ok(Scheduler {
            base,
            cfg,
            state: State::default(),
            journal: None,
        })
    }

    /// Like [`Scheduler::new`], replaying and then appending to the journal at `path`.
    pub fn open(base: Instance, cfg: Config, path: &Path) -> Result<Self, ServiceError> {
        let mut s = Scheduler::new(base, cfg)?;
        let (journal, events) = Journal::open(path)?;
        for e in &events {
            s.state.apply(e);
        }
        s.journal = Some(journal);
        Ok(s)
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn base(&self) -> &Instance {
        &self.base
    }

    fn record(&mut self, event: Event) -> Result<(), ServiceError> {
        if let Some(j) = &mut self.journal {
            j.append(&event)?;
        }
        self.state.apply(&event);
        Ok(())
    }

    /// Parses and enqueues a JSON payload. Returns the request id and whether
    /// it is new (`false` for an idempotent replay).
    pub fn submit_json(&mut self, body: &str, key: Option<&str>, now: i64) -> Result<(RequestId, bool), ServiceError> {
        let mut payload: SubmitPayload = from_json_str(body)?;
        if payload.idempotency_key.is_none() {
            payload.idempotency_key = key.map(str::to_owned);
        }
        self.submit(payload, now)
    }

    pub fn submit(&mut self, payload: SubmitPayload, now: i64) -> Result<(RequestId, bool), ServiceError> {
        if let Some(key) = &payload.idempotency_key {
            if let Some(id) = self.state.idempotency.get(key) {
                return Ok((id.clone(), false));
            }
        }
        self.check_patient(&payload.patient)?;
        let request_id = format!("req-{:06}", self.state.next_seq + 1);
        let request = BookingRequest {
            request_id: request_id.clone(),
            patient: payload.patient,
            submitted_at: now,
            idempotency_key: payload.idempotency_key,
            status: RequestStatus::Queued,
        };
        self.record(Event::Submitted {
            request: Box::new(request),
        })?;
        Ok((request_id, true))
    }

    fn check_patient(&self, p: &Patient) -> Result<(), ServiceError> {
        if p.needs.is_empty() {
            return Err(ServiceError::Invalid {
                code: "empty-request".into(),
                message: "patient has no needs".into(),
            });
        }
        let mut inst = self.base.clone();
        let mut p = p.clone();
        p.declared = true;
        inst.add_patient(p);
        let report = validate_instance(&inst);
        match report.issues.iter().find(|i| i.severity == Severity::Error) {
            Some(issue) => Err(ServiceError::Invalid {
                code: issue.code.as_str().to_owned(),
                message: issue.fact.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn status(&self, id: &str) -> Result<&BookingRequest, ServiceError> {
        self.state
            .requests
            .get(id)
            .ok_or_else(|| ServiceError::UnknownRequest(id.to_owned()))
    }

    fn booked_slots(&self) -> BTreeSet<AvailabilitySlot> {
        self.state.committed.iter().map(|b| b.appointment.slot()).collect()
    }

    pub fn availability(&self, clinic: &str) -> Result<Availability, ServiceError> {
        let id = ClinicId::new(clinic);
        let c = self
            .base
            .clinic(&id)
            .filter(|c| c.declared)
            .ok_or_else(|| ServiceError::UnknownClinic(clinic.to_owned()))?;
        let booked = self.booked_slots();
        let mut slots: Vec<AvailabilitySlot> = self
            .base
            .slots
            .iter()
            .filter(|s| s.clinic == id && !booked.contains(*s))
            .cloned()
            .collect();
        slots.sort();
        slots.dedup();
        Ok(Availability {
            clinic: id,
            modality: c.modality.clone(),
            distance_applies: c.modality.is_physical(),
            slots,
        })
    }

    /// Moves every queued request to `Solving` and snapshots the batch.
    /// `None` when the queue is empty.
    pub fn begin_tick(&mut self, now: i64) -> Option<BatchPlan> {
        let mut requests = Vec::new();
        for r in self.state.requests.values_mut() {
            if r.status == RequestStatus::Queued {
                r.status = RequestStatus::Solving;
                requests.push(r.clone());
            }
        }
        if requests.is_empty() {
            return None;
        }
        let booked = self.booked_slots();
        let mut catalog = self.base.clone();
        catalog.slots.retain(|s| s.time >= now && !booked.contains(s));
        catalog.current_time = Some(now);
        for b in &self.state.committed {
            let a = &b.appointment;
            let cost = catalog.visit_type(&a.visit).filter(|v| v.chronic).map_or(0, |v| v.cost);
            if let Some(c) = catalog.clinics.get_mut(&a.clinic) {
                if let Some(budget) = &mut c.budget {
                    *budget = budget.saturating_sub(cost);
                }
            }
        }
        Some(BatchPlan {
            now,
            requests,
            catalog,
            cfg: self.cfg,
        })
    }

    pub fn commit(&mut self, outcome: BatchOutcome) -> Result<TickReport, ServiceError> {
        let report = TickReport {
            now: outcome.now,
            batch_size: outcome.outcomes.len(),
            scheduled: outcome
                .outcomes
                .iter()
                .filter(|(_, s)| matches!(s, RequestStatus::Scheduled { .. }))
                .map(|(id, _)| id.clone())
                .collect(),
            rejected: outcome
                .outcomes
                .iter()
                .filter_map(|(id, s)| match s {
                    RequestStatus::Rejected { reason } => Some((id.clone(), *reason)),
                    _ => None,
                })
                .collect(),
        };
        self.record(Event::Tick {
            now: outcome.now,
            outcomes: outcome.outcomes,
            bookings: outcome.bookings,
        })?;
        Ok(report)
    }

    /// Runs a whole tick in place. An empty queue is a no-op.
    pub fn tick(&mut self, now: i64) -> Result<TickReport, ServiceError> {
        match self.begin_tick(now) {
            Some(plan) => {
                let outcome = plan.solve();
                self.commit(outcome)
            }
            None => Ok(TickReport {
                now,
                batch_size: 0,
                scheduled: Vec::new(),
                rejected: Vec::new(),
            }),
        }
    }

    /// The base catalog plus every scheduled request (patient id = request
    /// id), and the committed appointments in the same id space. Suitable
    /// for `check_all`.
    pub fn committed_instance(&self) -> (Instance, Vec<Appointment>) {
        let mut inst = self.base.clone();
        for r in self.state.requests.values() {
            if matches!(r.status, RequestStatus::Scheduled { .. }) {
                let mut p = r.patient.clone();
                p.id = PatientId::new(r.request_id.as_str());
                inst.add_patient(p);
            }
        }
        let mut appts: Vec<Appointment> = self
            .state
            .committed
            .iter()
            .map(|b| Appointment {
                patient: PatientId::new(b.request_id.as_str()),
                ..b.appointment.clone()
            })
            .collect();
        appts.sort();
        (inst, appts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use medsched_core::domain::{Clinic, Doctor, Need, Urgency, VisitType};

    const T: i64 = 1_727_308_800;

    fn base() -> Instance {
        let mut inst = Instance::new();
        inst.add_doctor(Doctor::new("m1", "GP"))
            .add_clinic(Clinic::physical("c1", "Clinic A"))
            .add_visit_type(VisitType::new("v1", "Cardiology"))
            .add_slot("c1", "m1", "v1", T)
            .add_slot("c1", "m1", "v1", T + 3600);
        inst
    }

    fn payload(id: &str, urgency: i64) -> SubmitPayload {
        let mut p = Patient::new(id, "", "");
        p.distances.insert("c1".into(), 1);
        p.needs.push(Need {
            visit: "v1".into(),
            urgency: Urgency::new(urgency).unwrap(),
        });
        SubmitPayload {
            patient: p,
            idempotency_key: None,
        }
    }

    #[test]
    fn empty_tick_is_noop() {
        let mut s = Scheduler::new(base(), Config::default()).unwrap();
        let r = s.tick(T).unwrap();
        assert_eq!(r.batch_size, 0);
        assert_eq!(s.state().ticks, 0);
    }

    #[test]
    fn overflow_rejects_lowest_urgency() {
        let mut s = Scheduler::new(base(), Config::default()).unwrap();
        let (a, _) = s.submit(payload("pa", 1), T - 10).unwrap();
        let (b, _) = s.submit(payload("pb", 3), T - 9).unwrap();
        let (c, _) = s.submit(payload("pc", 2), T - 8).unwrap();
        let report = s.tick(T).unwrap();
        assert_eq!(report.rejected, vec![(a.clone(), RejectReason::CapacityConflict)]);
        match &s.status(&b).unwrap().status {
            RequestStatus::Scheduled { appointments } => assert_eq!(appointments[0].time, T),
            other => panic!("{other:?}"),
        }
        assert!(matches!(s.status(&c).unwrap().status, RequestStatus::Scheduled { .. }));
        assert_eq!(s.availability("c1").unwrap().slots.len(), 0);
        // nothing left: a new request cannot be placed at all
        let (d, _) = s.submit(payload("pd", 3), T).unwrap();
        s.tick(T).unwrap();
        assert_eq!(
            s.status(&d).unwrap().status,
            RequestStatus::Rejected {
                reason: RejectReason::NoFeasibleSlot
            }
        );
    }

    #[test]
    fn idempotent_submission() {
        let mut s = Scheduler::new(base(), Config::default()).unwrap();
        let mut p = payload("pa", 1);
        p.idempotency_key = Some("k1".into());
        let (a, new_a) = s.submit(p.clone(), T).unwrap();
        let (b, new_b) = s.submit(p, T).unwrap();
        assert_eq!(a, b);
        assert!(new_a && !new_b);
        assert_eq!(s.state().requests.len(), 1);
    }

    #[test]
    fn bad_urgency_is_schema_error() {
        let mut s = Scheduler::new(base(), Config::default()).unwrap();
        let body = r#"{"patient": {"id": "p1", "needs": [{"visit": "v1", "urgency": 5}]}}"#;
        let err = s.submit_json(body, None, T).unwrap_err();
        assert_eq!(err.code(), "urgency-out-of-range");
    }

    #[test]
    fn unknown_visit_rejected_at_submit() {
        let mut s = Scheduler::new(base(), Config::default()).unwrap();
        let body = r#"{"patient": {"id": "p1", "needs": [{"visit": "v9", "urgency": 1}]}}"#;
        let err = s.submit_json(body, None, T).unwrap_err();
        assert_eq!(err.code(), "unknown-visit");
    }
}
