//! JSON instance format (`"format": 1`).
//!
//! ```json
//! {
//!   "format": 1,
//!   "current_time": null,
//!   "patients":    [{"id": "p1", "given_name": "Mario", "needs": [{"visit": "v1", "urgency": 3}], ...}],
//!   "doctors":     [{"id": "m1", "doctor_type": "GP", "experience": [...]}],
//!   "clinics":     [{"id": "c3", "modality": {"kind": "physical", "name": "Clinic A"}, "accessible": true}],
//!   "visit_types": [{"id": "v1", "specialty": "Cardiology", "required_sessions": 1}],
//!   "slots":       [{"clinic": "c3", "doctor": "m1", "visit": "v1", "time": 1727308800}]
//! }
//! ```
//!
//! Every field is optional; `{}` is the empty instance. Records referenced
//! but never declared carry `"declared": false`.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AvailabilitySlot, Clinic, Doctor, Instance, Patient, SlotTime, VisitType};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JsonError {
    /// `path` is the JSON path of the offending field, e.g. `patients[0].needs[1].urgency`.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
}

impl JsonError {
    /// Machine-readable code: the leading `code:` of the message when the
    /// underlying error carries one, else `schema-violation`.
    pub fn code(&self) -> &str {
        match self {
            JsonError::Version(_) => "unsupported-format",
            JsonError::Schema { message, .. } => message
                .split_once(':')
                .map(|(code, _)| code)
                .filter(|c| !c.is_empty() && c.chars().all(|ch| ch.is_ascii_lowercase() || ch == '-'))
                .unwrap_or("schema-violation"),
        }
    }
}

fn format_default() -> u32 {
    FORMAT_VERSION
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(default = "format_default")]
    format: u32,
    #[serde(default)]
    current_time: Option<SlotTime>,
    #[serde(default)]
    patients: Vec<Patient>,
    #[serde(default)]
    doctors: Vec<Doctor>,
    #[serde(default)]
    clinics: Vec<Clinic>,
    #[serde(default)]
    visit_types: Vec<VisitType>,
    #[serde(default)]
    slots: Vec<AvailabilitySlot>,
}

impl From<&Instance> for InstanceDoc {
    fn from(inst: &Instance) -> Self {
        InstanceDoc {
            format: FORMAT_VERSION,
            current_time: inst.current_time,
            patients: inst.patients.values().cloned().collect(),
            doctors: inst.doctors.values().cloned().collect(),
            clinics: inst.clinics.values().cloned().collect(),
            visit_types: inst.visit_types.values().cloned().collect(),
            slots: inst.slots.clone(),
        }
    }
}

fn keyed<K: std::hash::Hash + Eq, V>(items: Vec<V>, key: impl Fn(&V) -> K) -> IndexMap<K, V> {
    items.into_iter().map(|v| (key(&v), v)).collect()
}

/// Deserializes any serde type, reporting the JSON path of a failure.
pub fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, JsonError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        JsonError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })
}

pub fn parse_json(text: &str) -> Result<Instance, JsonError> {
    let doc: InstanceDoc = from_json_str(text)?;
    if doc.format != FORMAT_VERSION {
        return Err(JsonError::Version(doc.format));
    }
    Ok(Instance {
        patients: keyed(doc.patients, |p| p.id.clone()),
        doctors: keyed(doc.doctors, |d| d.id.clone()),
        clinics: keyed(doc.clinics, |c| c.id.clone()),
        visit_types: keyed(doc.visit_types, |v| v.id.clone()),
        slots: doc.slots,
        current_time: doc.current_time,
    })
}

pub fn emit_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceDoc::from(inst)).expect("instance serialization is infallible")
}

pub fn instance_to_value(inst: &Instance) -> serde_json::Value {
    serde_json::to_value(InstanceDoc::from(inst)).expect("instance serialization is infallible")
}
