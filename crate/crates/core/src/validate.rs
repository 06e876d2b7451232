//! Referential-integrity and invariant checks over an [`Instance`].

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{ClinicId, DoctorId, Instance, VisitId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueCode {
    UnknownPatient,
    UnknownDoctor,
    UnknownClinic,
    UnknownVisit,
    EmptyId,
    DuplicateNeed,
    DuplicateSlot,
    InvalidTimeWindow,
    InvalidInterval,
    InvalidSessionCount,
    InvalidConditionWindow,
    NegativeTime,
    CurrentTimeAfterSlots,
    MissingDistance,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::UnknownPatient => "unknown-patient",
            IssueCode::UnknownDoctor => "unknown-doctor",
            IssueCode::UnknownClinic => "unknown-clinic",
            IssueCode::UnknownVisit => "unknown-visit",
            IssueCode::EmptyId => "empty-id",
            IssueCode::DuplicateNeed => "duplicate-need",
            IssueCode::DuplicateSlot => "duplicate-slot",
            IssueCode::InvalidTimeWindow => "invalid-time-window",
            IssueCode::InvalidInterval => "invalid-interval",
            IssueCode::InvalidSessionCount => "invalid-session-count",
            IssueCode::InvalidConditionWindow => "invalid-condition-window",
            IssueCode::NegativeTime => "negative-time",
            IssueCode::CurrentTimeAfterSlots => "current-time-after-slots",
            IssueCode::MissingDistance => "missing-distance",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub severity: Severity,
    /// The offending fact, in fact-file syntax.
    pub fact: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// No error-severity issues. Warnings do not make an instance invalid.
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn codes(&self) -> Vec<IssueCode> {
        self.issues.iter().map(|i| i.code).collect()
    }
}

struct Collector(BTreeSet<Issue>);

impl Collector {
    fn error(&mut self, code: IssueCode, fact: String) {
        self.0.insert(Issue {
            code,
            severity: Severity::Error,
            fact,
        });
    }

    fn warn(&mut self, code: IssueCode, fact: String) {
        self.0.insert(Issue {
            code,
            severity: Severity::Warning,
            fact,
        });
    }
}

/// Every referential-integrity or invariant violation in the instance,
/// sorted so that the report does not depend on fact order.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut out = Collector(BTreeSet::new());

    let doctor_ok = |id: &DoctorId| inst.doctor(id).is_some_and(|d| d.declared);
    let clinic_ok = |id: &ClinicId| inst.clinic(id).is_some_and(|c| c.declared);
    let visit_ok = |id: &VisitId| inst.visit_type(id).is_some_and(|v| v.declared);

    for p in inst.patients.values() {
        if p.id.as_str().is_empty() {
            out.error(IssueCode::EmptyId, "patient with empty id".into());
        }
        if !p.declared {
            // One issue per dependent fact, so the report names what dangles.
            for n in &p.needs {
                out.error(
                    IssueCode::UnknownPatient,
                    format!("need({}, {}, {})", p.id, n.visit, n.urgency),
                );
            }
            for c in &p.clinic_prefs {
                out.error(IssueCode::UnknownPatient, format!("preference({}, {c})", p.id));
            }
            for s in &p.sensory_prefs {
                out.error(
                    IssueCode::UnknownPatient,
                    format!("sensory_preference({}, {s:?})", p.id),
                );
            }
            for d in &p.doctor_prefs {
                out.error(
                    IssueCode::UnknownPatient,
                    format!(
                        "doctor_preference({}, {:?}, {:?}, {})",
                        p.id, d.doctor_type, d.specialization, d.required_years
                    ),
                );
            }
            for w in &p.time_window_prefs {
                out.error(
                    IssueCode::UnknownPatient,
                    format!("appointment_preference({}, _, {}, {})", p.id, w.start, w.end),
                );
            }
            for (c, km) in &p.distances {
                out.error(IssueCode::UnknownPatient, format!("distance({}, {c}, {km})", p.id));
            }
            for (v, i) in &p.session_overrides {
                out.error(
                    IssueCode::UnknownPatient,
                    format!("patient_interval({}, {v}, {}, {})", p.id, i.min_days, i.max_days),
                );
            }
            if p.disabled {
                out.error(IssueCode::UnknownPatient, format!("disabled({})", p.id));
            }
        }

        let mut seen = HashSet::new();
        for n in &p.needs {
            let fact = format!("need({}, {}, {})", p.id, n.visit, n.urgency);
            if !visit_ok(&n.visit) {
                out.error(IssueCode::UnknownVisit, fact.clone());
            }
            if !seen.insert(&n.visit) {
                out.error(IssueCode::DuplicateNeed, fact);
            }
        }
        for c in &p.clinic_prefs {
            if !clinic_ok(c) {
                out.error(IssueCode::UnknownClinic, format!("preference({}, {c})", p.id));
            }
        }
        for (c, km) in &p.distances {
            if !clinic_ok(c) {
                out.error(IssueCode::UnknownClinic, format!("distance({}, {c}, {km})", p.id));
            }
        }
        for w in &p.time_window_prefs {
            let fact = format!("appointment_preference({}, _, {}, {})", p.id, w.start, w.end);
            if let Some(c) = &w.clinic {
                if !clinic_ok(c) {
                    out.error(IssueCode::UnknownClinic, fact.clone());
                }
            }
            if w.start > w.end || w.start < 0 || w.end > 2395 {
                out.error(IssueCode::InvalidTimeWindow, fact);
            }
        }
        for (v, i) in &p.session_overrides {
            let fact = format!("patient_interval({}, {v}, {}, {})", p.id, i.min_days, i.max_days);
            if !visit_ok(v) {
                out.error(IssueCode::UnknownVisit, fact.clone());
            }
            if i.min_days > i.max_days {
                out.error(IssueCode::InvalidInterval, fact);
            }
        }
    }

    for d in inst.doctors.values() {
        if d.id.as_str().is_empty() {
            out.error(IssueCode::EmptyId, "doctor with empty id".into());
        }
        if !d.declared {
            for e in &d.experience {
                out.error(
                    IssueCode::UnknownDoctor,
                    format!("doctor_experience({}, {:?}, {})", d.id, e.specialization, e.years),
                );
            }
        }
    }

    for c in inst.clinics.values() {
        if c.id.as_str().is_empty() {
            out.error(IssueCode::EmptyId, "clinic with empty id".into());
        }
        if !c.declared {
            if c.accessible {
                out.error(IssueCode::UnknownClinic, format!("accessible({})", c.id));
            }
            if let Some(b) = c.budget {
                out.error(IssueCode::UnknownClinic, format!("budget({}, {b})", c.id));
            }
        }
        for e in &c.env_conditions {
            let fact = format!(
                "environmental_condition({}, {:?}, {}, {}, {})",
                c.id, e.condition_type, e.level, e.start, e.end
            );
            if !c.declared {
                out.error(IssueCode::UnknownClinic, fact.clone());
            }
            if e.start > e.end {
                out.error(IssueCode::InvalidConditionWindow, fact);
            }
        }
    }

    for v in inst.visit_types.values() {
        if v.id.as_str().is_empty() {
            out.error(IssueCode::EmptyId, "visit type with empty id".into());
        }
        if !v.declared {
            if v.cost != 0 {
                out.error(IssueCode::UnknownVisit, format!("visit_cost({}, {})", v.id, v.cost));
            }
            if v.required_sessions != 1 {
                out.error(
                    IssueCode::UnknownVisit,
                    format!("required_sessions({}, {})", v.id, v.required_sessions),
                );
            }
            if let Some(i) = v.session_interval {
                out.error(
                    IssueCode::UnknownVisit,
                    format!("session_interval({}, {}, {})", v.id, i.min_days, i.max_days),
                );
            }
        }
        if v.required_sessions == 0 {
            out.error(
                IssueCode::InvalidSessionCount,
                format!("required_sessions({}, 0)", v.id),
            );
        }
        if let Some(i) = v.session_interval {
            if i.min_days > i.max_days {
                out.error(
                    IssueCode::InvalidInterval,
                    format!("session_interval({}, {}, {})", v.id, i.min_days, i.max_days),
                );
            }
        }
    }

    let mut seen_slots = HashSet::new();
    for s in &inst.slots {
        let fact = format!("availability({}, {}, {}, {})", s.clinic, s.doctor, s.visit, s.time);
        if !clinic_ok(&s.clinic) {
            out.error(IssueCode::UnknownClinic, fact.clone());
        }
        if !doctor_ok(&s.doctor) {
            out.error(IssueCode::UnknownDoctor, fact.clone());
        }
        if !visit_ok(&s.visit) {
            out.error(IssueCode::UnknownVisit, fact.clone());
        }
        if s.time < 0 {
            out.error(IssueCode::NegativeTime, fact.clone());
        }
        if !seen_slots.insert(s) {
            out.error(IssueCode::DuplicateSlot, fact);
        }
    }

    if let Some(now) = inst.current_time {
        if now < 0 {
            out.error(IssueCode::NegativeTime, format!("current_time({now})"));
        }
        if inst.max_slot_time().is_some_and(|max| now > max) {
            out.error(IssueCode::CurrentTimeAfterSlots, format!("current_time({now})"));
        }
    }

    // A physical clinic the patient could actually be booked at, without a
    // distance fact, scores as distance 0.
    for p in inst.patients.values().filter(|p| p.declared) {
        let reachable: BTreeSet<&ClinicId> = inst
            .slots
            .iter()
            .filter(|s| p.need_for(&s.visit).is_some())
            .map(|s| &s.clinic)
            .collect();
        for c in reachable {
            let physical = inst.clinic(c).is_some_and(|c| c.modality.is_physical());
            if physical && !p.distances.contains_key(c) {
                out.warn(IssueCode::MissingDistance, format!("distance({}, {c}, ?)", p.id));
            }
        }
    }

    ValidationReport {
        issues: out.0.into_iter().collect(),
    }
}
