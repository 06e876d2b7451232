//! Problem entities, the assembled [`Instance`] and the [`Schedule`] representation.
//!
//! Entities are keyed by opaque string identifiers. Every record carries a
//! `declared` flag: facts may mention an entity (for instance `accessible(c4)`)
//! without the entity itself being declared, and such placeholders are kept so
//! that validation can report the dangling reference instead of silently
//! dropping the fact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unix timestamp in seconds.
pub type SlotTime = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_type!(
    /// Patient identifier, e.g. `p1`.
    PatientId
);
id_type!(
    /// Doctor identifier, e.g. `m1`.
    DoctorId
);
id_type!(
    /// Clinic identifier, e.g. `c3`.
    ClinicId
);
id_type!(
    /// Visit type identifier, e.g. `v1`.
    VisitId
);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("urgency-out-of-range: urgency must be 1, 2 or 3, got {0}")]
    UrgencyOutOfRange(i64),
    #[error("no-temporal-origin: instance declares no current_time and has no availability slots")]
    NoTemporalOrigin,
}

/// Clinical urgency of a need: 1 (low), 2 (medium) or 3 (high).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct Urgency(u8);

impl Urgency {
    pub const LOW: Urgency = Urgency(1);
    pub const MEDIUM: Urgency = Urgency(2);
    pub const HIGH: Urgency = Urgency(3);

    pub fn new(level: i64) -> Result<Self, ModelError> {
        match level {
            1..=3 => Ok(Urgency(level as u8)),
            _ => Err(ModelError::UrgencyOutOfRange(level)),
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }
}

impl TryFrom<i64> for Urgency {
    type Error = ModelError;

    fn try_from(level: i64) -> Result<Self, Self::Error> {
        Urgency::new(level)
    }
}

impl From<Urgency> for u8 {
    fn from(u: Urgency) -> u8 {
        u.0
    }
}

impl fmt::Display for Urgency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Need {
    pub visit: VisitId,
    pub urgency: Urgency,
}

/// Allowed gap between consecutive sessions, in whole days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionInterval {
    pub min_days: u32,
    pub max_days: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DoctorPreference {
    pub doctor_type: String,
    pub specialization: String,
    pub required_years: u32,
}

/// Preferred time-of-day window, in the encoded `hour*100 + (minute/3)*5` scale.
///
/// The clinic is stored but does not restrict the preference.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeWindowPreference {
    #[serde(default)]
    pub clinic: Option<ClinicId>,
    pub start: i64,
    pub end: i64,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patient {
    pub id: PatientId,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub declared: bool,
    #[serde(default)]
    pub given_name: String,
    #[serde(default)]
    pub family_name: String,
    #[serde(default)]
    pub city: Option<String>,
    #[serde(default)]
    pub disabled: bool,
    #[serde(default)]
    pub clinic_prefs: BTreeSet<ClinicId>,
    #[serde(default)]
    pub sensory_prefs: BTreeSet<String>,
    #[serde(default)]
    pub doctor_prefs: Vec<DoctorPreference>,
    #[serde(default)]
    pub time_window_prefs: Vec<TimeWindowPreference>,
    #[serde(default)]
    pub distances: BTreeMap<ClinicId, u32>,
    #[serde(default)]
    pub needs: Vec<Need>,
    #[serde(default)]
    pub session_overrides: BTreeMap<VisitId, SessionInterval>,
}

impl Patient {
    pub fn new(id: impl Into<PatientId>, given_name: &str, family_name: &str) -> Self {
        Patient {
            declared: true,
            given_name: given_name.to_owned(),
            family_name: family_name.to_owned(),
            ..Patient::placeholder(id.into())
        }
    }

    /// A record for a patient that is referenced by facts but never declared.
    pub fn placeholder(id: PatientId) -> Self {
        Patient {
            id,
            declared: false,
            given_name: String::new(),
            family_name: String::new(),
            city: None,
            disabled: false,
            clinic_prefs: BTreeSet::new(),
            sensory_prefs: BTreeSet::new(),
            doctor_prefs: Vec::new(),
            time_window_prefs: Vec::new(),
            distances: BTreeMap::new(),
            needs: Vec::new(),
            session_overrides: BTreeMap::new(),
        }
    }

    pub fn need_for(&self, visit: &VisitId) -> Option<&Need> {
        self.needs.iter().find(|n| &n.visit == visit)
    }

    pub fn max_urgency(&self) -> Option<Urgency> {
        self.needs.iter().map(|n| n.urgency).max()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Experience {
    pub specialization: String,
    pub years: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Doctor {
    pub id: DoctorId,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub declared: bool,
    #[serde(default)]
    pub given_name: String,
    #[serde(default)]
    pub family_name: String,
    #[serde(default)]
    pub age: u32,
    #[serde(default)]
    pub city: String,
    #[serde(default)]
    pub doctor_type: String,
    #[serde(default)]
    pub experience: Vec<Experience>,
}

impl Doctor {
    pub fn new(id: impl Into<DoctorId>, doctor_type: &str) -> Self {
        Doctor {
            declared: true,
            doctor_type: doctor_type.to_owned(),
            ..Doctor::placeholder(id.into())
        }
    }

    pub fn placeholder(id: DoctorId) -> Self {
        Doctor {
            id,
            declared: false,
            given_name: String::new(),
            family_name: String::new(),
            age: 0,
            city: String::new(),
            doctor_type: String::new(),
            experience: Vec::new(),
        }
    }

    pub fn with_experience(mut self, specialization: &str, years: u32) -> Self {
        self.experience.push(Experience {
            specialization: specialization.to_owned(),
            years,
        });
        self
    }
}

/// How a clinic delivers care. Distance is always 0 for the non-physical kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modality {
    Physical { name: String },
    HomeCare,
    Telemedicine,
}

impl Modality {
    pub const HOME_CARE_LABEL: &'static str = "Home Care";
    pub const TELEMEDICINE_LABEL: &'static str = "Telemedicine";

    /// Reads the second argument of a `clinic/2` fact.
    pub fn from_label(label: &str) -> Self {
        let norm: String = label
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .collect::<String>()
            .to_lowercase();
        match norm.as_str() {
            "homecare" => Modality::HomeCare,
            "telemedicine" => Modality::Telemedicine,
            _ => Modality::Physical { name: label.to_owned() },
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Modality::Physical { name } => name,
            Modality::HomeCare => Self::HOME_CARE_LABEL,
            Modality::Telemedicine => Self::TELEMEDICINE_LABEL,
        }
    }

    pub fn is_physical(&self) -> bool {
        matches!(self, Modality::Physical { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EnvCondition {
    pub condition_type: String,
    pub level: u32,
    pub start: SlotTime,
    pub end: SlotTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clinic {
    pub id: ClinicId,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub declared: bool,
    pub modality: Modality,
    #[serde(default)]
    pub accessible: bool,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub env_conditions: Vec<EnvCondition>,
}

impl Clinic {
    pub fn new(id: impl Into<ClinicId>, modality: Modality) -> Self {
        Clinic {
            id: id.into(),
            declared: true,
            modality,
            accessible: false,
            budget: None,
            env_conditions: Vec::new(),
        }
    }

    pub fn physical(id: impl Into<ClinicId>, name: &str) -> Self {
        Clinic::new(id, Modality::Physical { name: name.to_owned() })
    }

    pub fn placeholder(id: ClinicId) -> Self {
        Clinic {
            declared: false,
            ..Clinic::physical(id, "")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitType {
    pub id: VisitId,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub declared: bool,
    #[serde(default)]
    pub specialty: String,
    #[serde(default)]
    pub condition_label: String,
    #[serde(default)]
    pub chronic: bool,
    /// Excludes home-care and telemedicine clinics.
    #[serde(default)]
    pub onsite_only: bool,
    /// Excludes telemedicine clinics.
    #[serde(default)]
    pub in_person: bool,
    #[serde(default)]
    pub cost: u64,
    #[serde(default = "one")]
    pub required_sessions: u32,
    #[serde(default)]
    pub session_interval: Option<SessionInterval>,
}

fn one() -> u32 {
    1
}

impl VisitType {
    pub fn new(id: impl Into<VisitId>, specialty: &str) -> Self {
        VisitType {
            declared: true,
            specialty: specialty.to_owned(),
            ..VisitType::placeholder(id.into())
        }
    }

    pub fn placeholder(id: VisitId) -> Self {
        VisitType {
            id,
            declared: false,
            specialty: String::new(),
            condition_label: String::new(),
            chronic: false,
            onsite_only: false,
            in_person: false,
            cost: 0,
            required_sessions: 1,
            session_interval: None,
        }
    }

    /// Whether this visit may take place at a clinic of the given modality.
    pub fn allows(&self, modality: &Modality) -> bool {
        match modality {
            Modality::Physical { .. } => true,
            Modality::HomeCare => !self.onsite_only,
            Modality::Telemedicine => !self.onsite_only && !self.in_person,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AvailabilitySlot {
    pub clinic: ClinicId,
    pub doctor: DoctorId,
    pub visit: VisitId,
    pub time: SlotTime,
}

/// A booked session. Field order defines the lexicographic order used to
/// break ties between equally good schedules.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Appointment {
    pub patient: PatientId,
    pub clinic: ClinicId,
    pub doctor: DoctorId,
    pub visit: VisitId,
    pub time: SlotTime,
}

impl Appointment {
    pub fn at(patient: PatientId, slot: &AvailabilitySlot) -> Self {
        Appointment {
            patient,
            clinic: slot.clinic.clone(),
            doctor: slot.doctor.clone(),
            visit: slot.visit.clone(),
            time: slot.time,
        }
    }

    pub fn slot(&self) -> AvailabilitySlot {
        AvailabilitySlot {
            clinic: self.clinic.clone(),
            doctor: self.doctor.clone(),
            visit: self.visit.clone(),
            time: self.time,
        }
    }
}

impl fmt::Display for Appointment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "appointment({}, {}, {}, {}, {})",
            self.patient, self.clinic, self.doctor, self.visit, self.time
        )
    }
}

/// The full scheduling problem.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instance {
    pub patients: IndexMap<PatientId, Patient>,
    pub doctors: IndexMap<DoctorId, Doctor>,
    pub clinics: IndexMap<ClinicId, Clinic>,
    pub visit_types: IndexMap<VisitId, VisitType>,
    pub slots: Vec<AvailabilitySlot>,
    /// Declared `current_time`, if any. See [`Instance::current_time`].
    pub current_time: Option<SlotTime>,
}

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_patient(&mut self, p: Patient) -> &mut Self {
        self.patients.insert(p.id.clone(), p);
        self
    }

    pub fn add_doctor(&mut self, d: Doctor) -> &mut Self {
        self.doctors.insert(d.id.clone(), d);
        self
    }

    pub fn add_clinic(&mut self, c: Clinic) -> &mut Self {
        self.clinics.insert(c.id.clone(), c);
        self
    }

    pub fn add_visit_type(&mut self, v: VisitType) -> &mut Self {
        self.visit_types.insert(v.id.clone(), v);
        self
    }

    pub fn add_slot(&mut self, clinic: &str, doctor: &str, visit: &str, time: SlotTime) -> &mut Self {
        self.slots.push(AvailabilitySlot {
            clinic: clinic.into(),
            doctor: doctor.into(),
            visit: visit.into(),
            time,
        });
        self
    }

    pub fn patient(&self, id: &PatientId) -> Option<&Patient> {
        self.patients.get(id)
    }

    pub fn doctor(&self, id: &DoctorId) -> Option<&Doctor> {
        self.doctors.get(id)
    }

    pub fn clinic(&self, id: &ClinicId) -> Option<&Clinic> {
        self.clinics.get(id)
    }

    pub fn visit_type(&self, id: &VisitId) -> Option<&VisitType> {
        self.visit_types.get(id)
    }

    pub fn min_slot_time(&self) -> Option<SlotTime> {
        self.slots.iter().map(|s| s.time).min()
    }

    pub fn max_slot_time(&self) -> Option<SlotTime> {
        self.slots.iter().map(|s| s.time).max()
    }

    /// The temporal origin for wait times: the declared `current_time`, or
    /// the earliest availability when none is declared.
    pub fn current_time(&self) -> Result<SlotTime, ModelError> {
        self.current_time
            .or_else(|| self.min_slot_time())
            .ok_or(ModelError::NoTemporalOrigin)
    }

    /// Sessions required for a visit; 1 when the visit declares none.
    pub fn required_sessions(&self, visit: &VisitId) -> u32 {
        self.visit_type(visit).map_or(1, |v| v.required_sessions)
    }

    /// Spacing rule for a patient's sessions of a visit. A patient override
    /// replaces the visit's own interval.
    pub fn session_interval(&self, patient: &PatientId, visit: &VisitId) -> Option<SessionInterval> {
        self.patient(patient)
            .and_then(|p| p.session_overrides.get(visit).copied())
            .or_else(|| self.visit_type(visit).and_then(|v| v.session_interval))
    }

    pub fn urgency(&self, patient: &PatientId, visit: &VisitId) -> Option<Urgency> {
        self.patient(patient).and_then(|p| p.need_for(visit)).map(|n| n.urgency)
    }

    /// Travel distance in km; 0 for non-physical clinics and for missing facts.
    pub fn distance(&self, patient: &PatientId, clinic: &ClinicId) -> u32 {
        match self.clinic(clinic) {
            Some(c) if !c.modality.is_physical() => 0,
            _ => self
                .patient(patient)
                .and_then(|p| p.distances.get(clinic).copied())
                .unwrap_or(0),
        }
    }

    pub fn has_slot(&self, slot: &AvailabilitySlot) -> bool {
        self.slots.iter().any(|s| s == slot)
    }

    pub fn total_needs(&self) -> usize {
        self.patients.values().map(|p| p.needs.len()).sum()
    }

    /// A copy with every collection sorted and deduplicated. Two instances
    /// describing the same set of facts have equal canonical forms.
    pub fn canonical(&self) -> Instance {
        let mut out = self.clone();
        out.patients.sort_keys();
        out.doctors.sort_keys();
        out.clinics.sort_keys();
        out.visit_types.sort_keys();
        for p in out.patients.values_mut() {
            p.doctor_prefs.sort();
            p.doctor_prefs.dedup();
            p.time_window_prefs.sort();
            p.time_window_prefs.dedup();
            p.needs.sort();
            p.needs.dedup();
        }
        for d in out.doctors.values_mut() {
            d.experience.sort();
            d.experience.dedup();
        }
        for c in out.clinics.values_mut() {
            c.env_conditions.sort();
            c.env_conditions.dedup();
        }
        out.slots.sort();
        out.slots.dedup();
        out
    }
}

/// Itemized objective contribution of one appointment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppointmentScore {
    pub appointment: Appointment,
    pub distance_term: i64,
    pub wait_term: i64,
    pub sensory_term: i64,
    pub clinic_bonus: i64,
    pub doctor_bonus: i64,
    pub window_bonus: i64,
}

impl AppointmentScore {
    pub fn total(&self) -> i64 {
        self.distance_term + self.wait_term + self.sensory_term
            - self.clinic_bonus
            - self.doctor_bonus
            - self.window_bonus
    }
}

/// A set of appointments together with its objective breakdown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub appointments: Vec<Appointment>,
    pub objective: i64,
    pub breakdown: Vec<AppointmentScore>,
}

impl Schedule {
    /// Builds a schedule from scored appointments, sorted by appointment.
    pub fn from_scores(mut breakdown: Vec<AppointmentScore>) -> Self {
        breakdown.sort_by(|a, b| a.appointment.cmp(&b.appointment));
        breakdown.dedup_by(|a, b| a.appointment == b.appointment);
        let objective = breakdown.iter().map(AppointmentScore::total).sum();
        let appointments = breakdown.iter().map(|s| s.appointment.clone()).collect();
        Schedule {
            appointments,
            objective,
            breakdown,
        }
    }

    pub fn empty() -> Self {
        Schedule::from_scores(Vec::new())
    }

    /// True when the stored objective equals the sum of the breakdown.
    pub fn is_consistent(&self) -> bool {
        self.objective == self.breakdown.iter().map(AppointmentScore::total).sum::<i64>()
            && self.appointments.len() == self.breakdown.len()
            && self
                .appointments
                .iter()
                .zip(&self.breakdown)
                .all(|(a, s)| a == &s.appointment)
    }

    pub fn len(&self) -> usize {
        self.appointments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.appointments.is_empty()
    }
}
