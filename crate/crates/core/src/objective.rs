//! Weighted minimization objective with a per-appointment breakdown.
//!
//! `distance*10000 + wait + penalty*1000 - clinic*10000 - doctor*1000 - window*1000`
//! with every weight configurable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Appointment, AppointmentScore, Instance, ModelError, Schedule};
use crate::preference;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("negative-wait: {appointment} is before current time {current_time}")]
    NegativeWait {
        appointment: Appointment,
        current_time: i64,
    },
    #[error("unknown patient or clinic in {0}")]
    UnknownEntity(Appointment),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveWeights {
    pub distance: i64,
    pub wait: i64,
    pub sensory: i64,
    pub clinic_bonus: i64,
    pub doctor_bonus: i64,
    pub window_bonus: i64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            distance: 10_000,
            wait: 1,
            sensory: 1_000,
            clinic_bonus: 10_000,
            doctor_bonus: 1_000,
            window_bonus: 1_000,
        }
    }
}

impl ObjectiveWeights {
    pub fn scaled(self, k: i64) -> Self {
        ObjectiveWeights {
            distance: self.distance * k,
            wait: self.wait * k,
            sensory: self.sensory * k,
            clinic_bonus: self.clinic_bonus * k,
            doctor_bonus: self.doctor_bonus * k,
            window_bonus: self.window_bonus * k,
        }
    }

    pub fn is_valid(&self) -> bool {
        [
            self.distance,
            self.wait,
            self.sensory,
            self.clinic_bonus,
            self.doctor_bonus,
            self.window_bonus,
        ]
        .iter()
        .all(|w| *w >= 0)
    }
}

/// Itemized score of one appointment, using the instance's temporal origin.
pub fn score_appointment(
    inst: &Instance,
    a: &Appointment,
    w: &ObjectiveWeights,
) -> Result<AppointmentScore, ScoreError> {
    score_appointment_at(inst, a, w, inst.current_time()?)
}

pub(crate) fn score_appointment_at(
    inst: &Instance,
    a: &Appointment,
    w: &ObjectiveWeights,
    current_time: i64,
) -> Result<AppointmentScore, ScoreError> {
    let (Some(patient), Some(clinic)) = (inst.patient(&a.patient), inst.clinic(&a.clinic)) else {
        return Err(ScoreError::UnknownEntity(a.clone()));
    };
    let wait = a.time - current_time;
    if wait < 0 {
        return Err(ScoreError::NegativeWait {
            appointment: a.clone(),
            current_time,
        });
    }
    let distance = i64::from(inst.distance(&a.patient, &a.clinic));
    let doctor_effect = inst
        .doctor(&a.doctor)
        .map_or(0, |d| preference::doctor_preference_effect(patient, d));
    Ok(AppointmentScore {
        appointment: a.clone(),
        distance_term: distance * w.distance,
        wait_term: wait * w.wait,
        sensory_term: preference::sensory_penalty(patient, clinic, a.time) * w.sensory,
        clinic_bonus: preference::clinic_preference_effect(patient, &a.clinic) * w.clinic_bonus,
        doctor_bonus: doctor_effect * w.doctor_bonus,
        window_bonus: preference::appointment_preference_effect(patient, a.time) * w.window_bonus,
    })
}

/// Scores every appointment and assembles the schedule. The empty schedule
/// scores 0 even when the instance has no temporal origin.
pub fn score_schedule(
    inst: &Instance,
    appointments: &[Appointment],
    w: &ObjectiveWeights,
) -> Result<Schedule, ScoreError> {
    if appointments.is_empty() {
        return Ok(Schedule::empty());
    }
    let now = inst.current_time()?;
    let breakdown = appointments
        .iter()
        .map(|a| score_appointment_at(inst, a, w, now))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Schedule::from_scores(breakdown))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Clinic, Doctor, EnvCondition, Modality, Patient, VisitType};

    const T0: i64 = 1_727_308_800;

    fn base() -> Instance {
        let mut inst = Instance::new();
        inst.add_doctor(Doctor::new("m1", "GP"))
            .add_visit_type(VisitType::new("v1", "Cardiology"))
            .add_clinic(Clinic::physical("c3", "Clinic A"))
            .add_clinic(Clinic::new("t1", Modality::Telemedicine))
            .add_slot("c3", "m1", "v1", T0)
            .add_slot("t1", "m1", "v1", T0);
        inst
    }

    fn appt(clinic: &str, time: i64) -> Appointment {
        Appointment {
            patient: "p1".into(),
            clinic: clinic.into(),
            doctor: "m1".into(),
            visit: "v1".into(),
            time,
        }
    }

    #[test]
    fn telemedicine_all_zero() {
        let mut inst = base();
        inst.add_patient(Patient::new("p1", "Mario", "Rossi"));
        let s = score_appointment(&inst, &appt("t1", T0), &ObjectiveWeights::default()).unwrap();
        assert_eq!(s.total(), 0);
    }

    #[test]
    fn distance_only() {
        let mut inst = base();
        let mut p = Patient::new("p1", "Mario", "Rossi");
        p.distances.insert("c3".into(), 15);
        inst.add_patient(p);
        let s = score_appointment(&inst, &appt("c3", T0), &ObjectiveWeights::default()).unwrap();
        assert_eq!(s.total(), 150_000);
        assert_eq!(s.distance_term, 150_000);
    }

    #[test]
    fn itemized_terms() {
        let mut inst = base();
        inst.slots.push(appt("c3", T0 + 600).slot());
        inst.clinics[0].env_conditions.push(EnvCondition {
            condition_type: "light".into(),
            level: 3,
            start: T0,
            end: T0 + 3600,
        });
        let mut p = Patient::new("p1", "Mario", "Rossi");
        p.distances.insert("c3".into(), 10);
        p.sensory_prefs.insert("light".into());
        p.clinic_prefs.insert("c3".into());
        inst.add_patient(p);
        let s = score_appointment(&inst, &appt("c3", T0 + 600), &ObjectiveWeights::default()).unwrap();
        assert_eq!(s.total(), 10 * 10_000 + 600 + 3_000 - 10_000);
        assert_eq!(
            (s.distance_term, s.wait_term, s.sensory_term, s.clinic_bonus),
            (100_000, 600, 3_000, 10_000)
        );
    }

    #[test]
    fn past_slot_is_an_error() {
        let mut inst = base();
        inst.add_patient(Patient::new("p1", "Mario", "Rossi"));
        inst.current_time = Some(T0 + 1);
        let err = score_appointment(&inst, &appt("c3", T0), &ObjectiveWeights::default());
        assert!(matches!(err, Err(ScoreError::NegativeWait { .. })));
    }

    #[test]
    fn schedule_sums() {
        let mut inst = base();
        let mut p = Patient::new("p1", "Mario", "Rossi");
        p.distances.insert("c3".into(), 2);
        inst.add_patient(p);
        let w = ObjectiveWeights::default();
        assert_eq!(score_schedule(&inst, &[], &w).unwrap().objective, 0);
        let one = score_schedule(&inst, &[appt("c3", T0)], &w).unwrap();
        assert_eq!(
            one.objective,
            score_appointment(&inst, &appt("c3", T0), &w).unwrap().total()
        );
        let two = score_schedule(&inst, &[appt("t1", T0), appt("c3", T0)], &w).unwrap();
        assert_eq!(two.objective, 20_000);
        assert!(two.is_consistent());
        assert_eq!(two.appointments[0].clinic.as_str(), "c3");
    }
}
