//! Hard-constraint checks over a candidate set of appointments.
//!
//! Each check is a pure function returning the violations it finds. The
//! default [`CheckMode::Faithful`] mode checks exactly the base rules;
//! [`CheckMode::Strict`] additionally forbids a patient or a doctor being in
//! two places at once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Appointment, ClinicId, Instance, Modality, PatientId, VisitId, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    #[default]
    Faithful,
    Strict,
}

impl FromStr for CheckMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "faithful" => Ok(CheckMode::Faithful),
            "strict" => Ok(CheckMode::Strict),
            other => Err(format!("unknown mode {other:?} (expected faithful or strict)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    SessionCount,
    DoubleBooking,
    UrgencyOrder,
    Accessibility,
    Budget,
    Modality,
    SessionSpacing,
    PatientOverlap,
    DoctorOverlap,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::SessionCount => "session-count",
            ViolationCode::DoubleBooking => "double-booking",
            ViolationCode::UrgencyOrder => "urgency-order",
            ViolationCode::Accessibility => "accessibility",
            ViolationCode::Budget => "budget",
            ViolationCode::Modality => "modality",
            ViolationCode::SessionSpacing => "session-spacing",
            ViolationCode::PatientOverlap => "patient-overlap",
            ViolationCode::DoctorOverlap => "doctor-overlap",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub code: ViolationCode,
    pub appointments: Vec<Appointment>,
    pub detail: String,
}

impl ConstraintViolation {
    fn new(code: ViolationCode, mut appointments: Vec<Appointment>, detail: String) -> Self {
        appointments.sort();
        ConstraintViolation {
            code,
            appointments,
            detail,
        }
    }
}

/// Raised when a schedule refers to something the instance does not offer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("unknown-slot: {0} does not match any availability")]
    UnknownSlot(Appointment),
    #[error("unknown-patient: {0}")]
    UnknownPatient(Appointment),
}

/// Every appointment must coincide with an availability slot and name a
/// known patient.
pub fn check_schedule_refs(inst: &Instance, appts: &[Appointment]) -> Result<(), ScheduleError> {
    let slots: BTreeSet<_> = inst.slots.iter().collect();
    for a in appts {
        if !slots.contains(&a.slot()) {
            return Err(ScheduleError::UnknownSlot(a.clone()));
        }
        if inst.patient(&a.patient).is_none() {
            return Err(ScheduleError::UnknownPatient(a.clone()));
        }
    }
    Ok(())
}

fn dedup(appts: &[Appointment]) -> Vec<&Appointment> {
    let set: BTreeSet<&Appointment> = appts.iter().collect();
    set.into_iter().collect()
}

/// Each need gets exactly `required_sessions` appointments, and no
/// appointment exists without a need behind it.
pub fn check_session_count(inst: &Instance, appts: &[Appointment]) -> Vec<ConstraintViolation> {
    let mut by_need: BTreeMap<(&PatientId, &VisitId), Vec<Appointment>> = BTreeMap::new();
    for a in dedup(appts) {
        by_need.entry((&a.patient, &a.visit)).or_default().push(a.clone());
    }
    let mut out = Vec::new();
    for p in inst.patients.values() {
        for n in &p.needs {
            let got = by_need.remove(&(&p.id, &n.visit)).unwrap_or_default();
            let want = inst.required_sessions(&n.visit) as usize;
            if got.len() != want {
                out.push(ConstraintViolation::new(
                    ViolationCode::SessionCount,
                    got.clone(),
                    format!("{} needs {} session(s) of {}, has {}", p.id, want, n.visit, got.len()),
                ));
            }
        }
    }
    for ((patient, visit), got) in by_need {
        out.push(ConstraintViolation::new(
            ViolationCode::SessionCount,
            got,
            format!("{patient} has appointments for {visit} without a need"),
        ));
    }
    out.sort();
    out
}

/// Distinct patients never share a (clinic, doctor, visit, time) slot. Strict
/// mode also rejects a patient or doctor double-booked at the same instant.
pub fn check_double_booking(inst: &Instance, appts: &[Appointment], mode: CheckMode) -> Vec<ConstraintViolation> {
    let _ = inst;
    let appts = dedup(appts);
    let mut out = Vec::new();
    for (i, a) in appts.iter().enumerate() {
        for b in &appts[i + 1..] {
            if a.patient != b.patient && a.slot() == b.slot() {
                out.push(ConstraintViolation::new(
                    ViolationCode::DoubleBooking,
                    vec![(*a).clone(), (*b).clone()],
                    format!("{} and {} share the same slot", a.patient, b.patient),
                ));
            }
            if mode == CheckMode::Strict && a.time == b.time {
                if a.patient == b.patient {
                    out.push(ConstraintViolation::new(
                        ViolationCode::PatientOverlap,
                        vec![(*a).clone(), (*b).clone()],
                        format!("{} has two appointments at {}", a.patient, a.time),
                    ));
                }
                if a.doctor == b.doctor && (a.clinic != b.clinic || a.visit != b.visit) {
                    out.push(ConstraintViolation::new(
                        ViolationCode::DoctorOverlap,
                        vec![(*a).clone(), (*b).clone()],
                        format!("{} serves two appointments at {}", a.doctor, a.time),
                    ));
                }
            }
        }
    }
    out.sort();
    out
}

/// On a shared (clinic, doctor, visit), a more urgent patient is never
/// scheduled after a less urgent one.
pub fn check_urgency_order(inst: &Instance, appts: &[Appointment]) -> Vec<ConstraintViolation> {
    let appts = dedup(appts);
    let mut out = Vec::new();
    for a in &appts {
        for b in &appts {
            if a.clinic != b.clinic || a.doctor != b.doctor || a.visit != b.visit {
                continue;
            }
            let (Some(ua), Some(ub)) = (inst.urgency(&a.patient, &a.visit), inst.urgency(&b.patient, &b.visit)) else {
                continue;
            };
            if ua > ub && a.time > b.time {
                out.push(ConstraintViolation::new(
                    ViolationCode::UrgencyOrder,
                    vec![(*a).clone(), (*b).clone()],
                    format!("{} (urgency {ua}) is after {} (urgency {ub})", a.patient, b.patient),
                ));
            }
        }
    }
    out.sort();
    out
}

pub fn check_accessibility(inst: &Instance, appts: &[Appointment]) -> Vec<ConstraintViolation> {
    let mut out: Vec<_> = dedup(appts)
        .into_iter()
        .filter(|a| {
            let disabled = inst.patient(&a.patient).is_some_and(|p| p.disabled);
            let accessible = inst.clinic(&a.clinic).is_some_and(|c| c.accessible);
            disabled && !accessible
        })
        .map(|a| {
            ConstraintViolation::new(
                ViolationCode::Accessibility,
                vec![a.clone()],
                format!("disabled patient {} at inaccessible clinic {}", a.patient, a.clinic),
            )
        })
        .collect();
    out.sort();
    out
}

/// Per clinic, the summed cost of chronic appointments stays within budget.
pub fn check_budget(inst: &Instance, appts: &[Appointment]) -> Vec<ConstraintViolation> {
    let mut spend: BTreeMap<&ClinicId, (u64, Vec<Appointment>)> = BTreeMap::new();
    for a in dedup(appts) {
        let Some(v) = inst.visit_type(&a.visit).filter(|v| v.chronic) else {
            continue;
        };
        let entry = spend.entry(&a.clinic).or_default();
        entry.0 += v.cost;
        entry.1.push(a.clone());
    }
    let mut out = Vec::new();
    for (clinic, (total, list)) in spend {
        if let Some(budget) = inst.clinic(clinic).and_then(|c| c.budget) {
            if total > budget {
                out.push(ConstraintViolation::new(
                    ViolationCode::Budget,
                    list,
                    format!("chronic cost {total} at {clinic} exceeds budget {budget}"),
                ));
            }
        }
    }
    out
}

pub fn check_modality(inst: &Instance, appts: &[Appointment]) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    for a in dedup(appts) {
        let (Some(v), Some(c)) = (inst.visit_type(&a.visit), inst.clinic(&a.clinic)) else {
            continue;
        };
        if !v.allows(&c.modality) {
            let why = match c.modality {
                Modality::HomeCare => "home care",
                _ => "telemedicine",
            };
            out.push(ConstraintViolation::new(
                ViolationCode::Modality,
                vec![a.clone()],
                format!("visit {} cannot be delivered by {why} clinic {}", a.visit, a.clinic),
            ));
        }
    }
    out.sort();
    out
}

/// Consecutive sessions of a (patient, visit) are separated by a whole-day
/// gap inside the applicable interval.
pub fn check_session_spacing(inst: &Instance, appts: &[Appointment]) -> Vec<ConstraintViolation> {
    let mut by_need: BTreeMap<(&PatientId, &VisitId), Vec<&Appointment>> = BTreeMap::new();
    for a in dedup(appts) {
        by_need.entry((&a.patient, &a.visit)).or_default().push(a);
    }
    let mut out = Vec::new();
    for ((patient, visit), mut list) in by_need {
        if list.len() < 2 {
            continue;
        }
        let Some(interval) = inst.session_interval(patient, visit) else {
            continue;
        };
        list.sort_by_key(|a| (a.time, *a));
        for pair in list.windows(2) {
            let days = (pair[1].time - pair[0].time).div_euclid(SECONDS_PER_DAY);
            if days < i64::from(interval.min_days) || days > i64::from(interval.max_days) {
                out.push(ConstraintViolation::new(
                    ViolationCode::SessionSpacing,
                    vec![pair[0].clone(), pair[1].clone()],
                    format!(
                        "{patient} sessions of {visit} are {days} days apart, allowed {}..={}",
                        interval.min_days, interval.max_days
                    ),
                ));
            }
        }
    }
    out
}

/// Union of every check. Empty iff the appointments form a feasible schedule.
pub fn check_all(
    inst: &Instance,
    appts: &[Appointment],
    mode: CheckMode,
) -> Result<Vec<ConstraintViolation>, ScheduleError> {
    check_schedule_refs(inst, appts)?;
    let mut out = check_session_count(inst, appts);
    out.extend(check_double_booking(inst, appts, mode));
    out.extend(check_urgency_order(inst, appts));
    out.extend(check_accessibility(inst, appts));
    out.extend(check_budget(inst, appts));
    out.extend(check_modality(inst, appts));
    out.extend(check_session_spacing(inst, appts));
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn is_feasible(inst: &Instance, appts: &[Appointment], mode: CheckMode) -> bool {
    matches!(check_all(inst, appts, mode), Ok(v) if v.is_empty())
}
