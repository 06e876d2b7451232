//! Constraint-based medical appointment scheduling.
//!
//! Instances are read from ground fact files ([`facts`]) or JSON ([`json`]),
//! checked with [`validate::validate_instance`], and solved by
//! [`solver::solve_exact`], which minimizes the weighted objective of
//! [`objective`] subject to the hard rules of [`constraints`].

pub mod constraints;
pub mod domain;
pub mod facts;
mod flow;
pub mod generator;
pub mod json;
pub mod objective;
pub mod oracle;
pub mod preference;
pub mod solver;
pub mod validate;

pub use constraints::{check_all, CheckMode, ConstraintViolation, ViolationCode};
pub use domain::{
    Appointment, AvailabilitySlot, Clinic, ClinicId, Doctor, DoctorId, Instance, Modality, Need, Patient, PatientId,
    Schedule, SlotTime, Urgency, VisitId, VisitType,
};
pub use facts::{emit_facts, emit_schedule, parse_facts, parse_schedule, ParseMode};
pub use generator::{generate, GenProfile};
pub use json::{emit_json, parse_json};
pub use objective::{score_schedule, ObjectiveWeights};
pub use oracle::enumerate_optimal;
pub use solver::{solve_exact, solve_greedy_first_available, SolveOptions, SolveResult, SolveStatus};
pub use validate::validate_instance;
