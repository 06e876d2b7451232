//! Preference effects and sensory penalty.
//!
//! These derive the 0/1 utility indicators and the sensory penalty that the
//! objective aggregates. None of them restricts feasibility.

use crate::domain::{Clinic, ClinicId, Doctor, Patient, SlotTime, SECONDS_PER_DAY};

/// Time of day on the `hour*100 + (minute/3)*5` scale, in `[0, 2395]`.
///
/// Minutes are quantized to steps of 3, each worth 5 units, so `18:30`
/// encodes to `1850` and `20:00` to `2000`.
pub fn encode_time_of_day(t: SlotTime) -> i64 {
    let hour = t.rem_euclid(SECONDS_PER_DAY) / 3600;
    let minute = t.rem_euclid(3600) / 60;
    hour * 100 + (minute / 3) * 5
}

pub fn clinic_preference_effect(patient: &Patient, clinic: &ClinicId) -> i64 {
    i64::from(patient.clinic_prefs.contains(clinic))
}

/// 1 when any of the patient's doctor preferences is met by the doctor's
/// type and experience in the requested specialization.
pub fn doctor_preference_effect(patient: &Patient, doctor: &Doctor) -> i64 {
    let met = patient.doctor_prefs.iter().any(|pref| {
        pref.doctor_type == doctor.doctor_type
            && doctor
                .experience
                .iter()
                .any(|e| e.specialization == pref.specialization && e.years >= pref.required_years)
    });
    i64::from(met)
}

/// 1 when the slot's time of day falls inside any preferred window.
pub fn appointment_preference_effect(patient: &Patient, t: SlotTime) -> i64 {
    let x = encode_time_of_day(t);
    let met = patient.time_window_prefs.iter().any(|w| w.start <= x && x <= w.end);
    i64::from(met)
}

/// Sum of condition levels at the clinic that match one of the patient's
/// sensory preferences and whose window (raw timestamps) contains `t`.
pub fn sensory_penalty(patient: &Patient, clinic: &Clinic, t: SlotTime) -> i64 {
    if patient.sensory_prefs.is_empty() {
        return 0;
    }
    clinic
        .env_conditions
        .iter()
        .filter(|c| patient.sensory_prefs.contains(&c.condition_type) && c.start <= t && t <= c.end)
        .map(|c| i64::from(c.level))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DoctorPreference, EnvCondition, TimeWindowPreference};
    use proptest::prelude::*;

    const MIDNIGHT: i64 = 1_727_308_800;

    // Independent reading of the encoding via explicit hour/minute fields.
    fn encode_oracle(t: i64) -> i64 {
        let secs_into_day = t % 86_400;
        let (h, m) = (secs_into_day / 3600, (secs_into_day % 3600) / 60);
        100 * h + 5 * (m / 3)
    }

    #[test]
    fn encode_examples() {
        assert_eq!(MIDNIGHT % 86_400, 0);
        assert_eq!(encode_time_of_day(MIDNIGHT), 0);
        assert_eq!(encode_time_of_day(MIDNIGHT + 66_600), 1850);
        assert_eq!(encode_time_of_day(MIDNIGHT + 43_200), 1200);
        assert_eq!(encode_time_of_day(MIDNIGHT + 86_399), 2395);
    }

    fn p1() -> Patient {
        let mut p = Patient::new("p1", "Mario", "Rossi");
        p.clinic_prefs.insert("c3".into());
        p.doctor_prefs.push(DoctorPreference {
            doctor_type: "GP".into(),
            specialization: "chronic_diseases".into(),
            required_years: 10,
        });
        p.time_window_prefs.push(TimeWindowPreference {
            clinic: Some("c3".into()),
            start: 1850,
            end: 2000,
        });
        p
    }

    #[test]
    fn clinic_effect() {
        let p = p1();
        assert_eq!(clinic_preference_effect(&p, &"c3".into()), 1);
        assert_eq!(clinic_preference_effect(&p, &"c4".into()), 0);
        let q = Patient::new("p2", "", "");
        assert_eq!(clinic_preference_effect(&q, &"c3".into()), 0);
    }

    #[test]
    fn doctor_effect() {
        let p = p1();
        let d = Doctor::new("m1", "GP").with_experience("chronic_diseases", 12);
        assert_eq!(doctor_preference_effect(&p, &d), 1);
        let d = Doctor::new("m1", "GP").with_experience("chronic_diseases", 9);
        assert_eq!(doctor_preference_effect(&p, &d), 0);
        let d = Doctor::new("m1", "GP").with_experience("cardiology", 30);
        assert_eq!(doctor_preference_effect(&p, &d), 0);
        let d = Doctor::new("m1", "Specialist").with_experience("chronic_diseases", 30);
        assert_eq!(doctor_preference_effect(&p, &d), 0);
        let q = Patient::new("p2", "", "");
        let d = Doctor::new("m1", "GP").with_experience("chronic_diseases", 12);
        assert_eq!(doctor_preference_effect(&q, &d), 0);
    }

    #[test]
    fn window_effect() {
        let p = p1();
        assert_eq!(appointment_preference_effect(&p, MIDNIGHT + 19 * 3600), 1);
        assert_eq!(appointment_preference_effect(&p, MIDNIGHT + 12 * 3600), 0);
        assert_eq!(appointment_preference_effect(&p, MIDNIGHT + 21 * 3600), 0);
        let q = Patient::new("p2", "", "");
        assert_eq!(appointment_preference_effect(&q, MIDNIGHT + 19 * 3600), 0);
    }

    #[test]
    fn sensory() {
        let mut p = Patient::new("p2", "Giulia", "Bianchi");
        p.sensory_prefs.insert("light".into());
        let mut c = crate::domain::Clinic::physical("c3", "Clinic A");
        c.env_conditions.push(EnvCondition {
            condition_type: "light".into(),
            level: 3,
            start: 1_727_480_000,
            end: 1_727_489_000,
        });
        assert_eq!(sensory_penalty(&p, &c, 1_727_481_600), 3);
        assert_eq!(sensory_penalty(&p, &c, 1_727_489_001), 0);
        assert_eq!(sensory_penalty(&Patient::new("p9", "", ""), &c, 1_727_481_600), 0);
        c.env_conditions.push(EnvCondition {
            condition_type: "noise".into(),
            level: 5,
            start: 0,
            end: i64::MAX,
        });
        assert_eq!(sensory_penalty(&p, &c, 1_727_481_600), 3);
        c.env_conditions.push(EnvCondition {
            condition_type: "light".into(),
            level: 2,
            start: 1_727_481_000,
            end: 1_727_482_000,
        });
        assert_eq!(sensory_penalty(&p, &c, 1_727_481_600), 5);
    }

    proptest! {
        #[test]
        fn encode_matches_oracle(t in 0i64..4_000_000_000) {
            let x = encode_time_of_day(t);
            prop_assert_eq!(x, encode_oracle(t));
            prop_assert!((0..=2395).contains(&x));
            prop_assert_eq!(x % 5, 0);
            prop_assert!(x % 100 <= 95);
        }

        #[test]
        fn encode_is_day_periodic(t in 0i64..2_000_000_000, k in 0i64..1000) {
            prop_assert_eq!(encode_time_of_day(t), encode_time_of_day(t + k * 86_400));
        }

        #[test]
        fn encode_monotone_within_day(day in 0i64..30_000, a in 0i64..86_400, b in 0i64..86_400) {
            let (lo, hi) = (a.min(b), a.max(b));
            let base = day * 86_400;
            prop_assert!(encode_time_of_day(base + lo) <= encode_time_of_day(base + hi));
        }
    }
}
