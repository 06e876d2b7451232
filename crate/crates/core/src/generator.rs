//! Seeded synthetic instances.
//!
//! Randomness comes from ChaCha8 seeded with the 64-bit seed, so output is
//! identical across platforms. Generation order is fixed: visit types,
//! clinics, doctors, patients (attributes, then needs), the planted witness
//! schedule, filler slots, then budgets.
//!
//! The witness is planted by visiting needs in descending urgency and giving
//! each session a fresh slot at a compatible clinic, later than every slot
//! already planted on the same (clinic, doctor, visit) triple, so the
//! witness satisfies every hard constraint and the instance is feasible.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    AvailabilitySlot, Clinic, Doctor, DoctorPreference, EnvCondition, Instance, Modality, Need, Patient,
    SessionInterval, SlotTime, TimeWindowPreference, Urgency, VisitType, SECONDS_PER_DAY,
};

pub const DEFAULT_EPOCH: SlotTime = 1_727_308_800;

/// Working hours covered by the slot grid: 08:00 to 18:00, every 15 minutes.
const GRID_START_HOUR: i64 = 8;
const GRID_PER_DAY: i64 = 40;
const GRID_STEP: i64 = 900;

const SPECIALTIES: &[(&str, &str)] = &[
    ("Cardiology", "Heart Attack"),
    ("Neurology", "Migraine"),
    ("Physiotherapy", "Back Pain"),
    ("Dermatology", "Eczema"),
    ("Oncology", "Follow-up"),
    ("Endocrinology", "Diabetes"),
    ("Pulmonology", "Asthma"),
    ("Orthopedics", "Fracture"),
    ("Psychiatry", "Anxiety"),
    ("Ophthalmology", "Glaucoma"),
];
const GIVEN: &[&str] = &["Mario", "Giulia", "Luca", "Anna", "Marco", "Sara", "Paolo", "Elena"];
const FAMILY: &[&str] = &["Rossi", "Bianchi", "Verdi", "Russo", "Ferrari", "Esposito", "Romano"];
const CITIES: &[&str] = &["L'Aquila", "Pescara", "Teramo", "Chieti", "Avezzano"];
const CONDITIONS: &[&str] = &["noise", "light", "crowding"];
const DOCTOR_TYPES: &[&str] = &["GP", "Specialist"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenProfile {
    pub disabled_fraction: f64,
    pub sensory_fraction: f64,
    pub clinic_pref_fraction: f64,
    pub doctor_pref_fraction: f64,
    pub window_pref_fraction: f64,
    /// Relative weights of urgency 1, 2, 3.
    pub urgency_weights: [u32; 3],
    pub visit_types: usize,
    pub chronic_fraction: f64,
    pub onsite_only_fraction: f64,
    pub in_person_fraction: f64,
    /// Fraction of visit types needing two spaced sessions.
    pub multi_session_fraction: f64,
    /// Fraction of (patient, multi-session need) pairs with a personal interval.
    pub override_fraction: f64,
    /// Add one telemedicine and one home-care clinic when there are at least 3 clinics.
    pub virtual_clinics: bool,
    pub inaccessible_fraction: f64,
    /// Budget per physical clinic as a multiple of the planted chronic
    /// spend there; `None` leaves clinics unbudgeted.
    pub budget_tightness: Option<f64>,
    pub horizon_days: u32,
    pub epoch: SlotTime,
    pub doctors_per_clinic: usize,
    pub max_distance: u32,
    pub env_windows_per_clinic: usize,
    /// Required sessions per slot. `None` gives every patient one need.
    pub contention: Option<f64>,
    /// Probability that a filler slot serves a visit some patient needs.
    pub relevant_fill: f64,
}

impl Default for GenProfile {
    fn default() -> Self {
        GenProfile {
            disabled_fraction: 0.1,
            sensory_fraction: 0.2,
            clinic_pref_fraction: 0.3,
            doctor_pref_fraction: 0.2,
            window_pref_fraction: 0.2,
            urgency_weights: [1, 1, 1],
            visit_types: 8,
            chronic_fraction: 0.25,
            onsite_only_fraction: 0.25,
            in_person_fraction: 0.25,
            multi_session_fraction: 0.0,
            override_fraction: 0.0,
            virtual_clinics: true,
            inaccessible_fraction: 0.3,
            budget_tightness: Some(1.5),
            horizon_days: 30,
            epoch: DEFAULT_EPOCH,
            doctors_per_clinic: 2,
            max_distance: 40,
            env_windows_per_clinic: 1,
            contention: None,
            relevant_fill: 0.8,
        }
    }
}

impl GenProfile {
    /// No preferences, no budgets, one visit type: the plainest possible instance.
    pub fn minimal() -> Self {
        GenProfile {
            disabled_fraction: 0.0,
            sensory_fraction: 0.0,
            clinic_pref_fraction: 0.0,
            doctor_pref_fraction: 0.0,
            window_pref_fraction: 0.0,
            visit_types: 1,
            chronic_fraction: 0.0,
            onsite_only_fraction: 0.0,
            in_person_fraction: 0.0,
            virtual_clinics: false,
            inaccessible_fraction: 0.0,
            budget_tightness: None,
            horizon_days: 1,
            doctors_per_clinic: 1,
            env_windows_per_clinic: 0,
            ..GenProfile::default()
        }
    }

    /// Small, dense instances exercising every rule: for oracle cross-checks.
    pub fn small() -> Self {
        GenProfile {
            disabled_fraction: 0.3,
            sensory_fraction: 0.5,
            clinic_pref_fraction: 0.5,
            doctor_pref_fraction: 0.4,
            window_pref_fraction: 0.4,
            visit_types: 3,
            chronic_fraction: 0.5,
            onsite_only_fraction: 0.3,
            in_person_fraction: 0.3,
            multi_session_fraction: 0.3,
            override_fraction: 0.3,
            inaccessible_fraction: 0.4,
            budget_tightness: Some(1.2),
            horizon_days: 4,
            doctors_per_clinic: 1,
            max_distance: 10,
            env_windows_per_clinic: 2,
            relevant_fill: 0.95,
            ..GenProfile::default()
        }
    }

    /// Few visit types, short horizon and more demand per slot.
    pub fn contention() -> Self {
        GenProfile {
            visit_types: 2,
            horizon_days: 3,
            budget_tightness: Some(1.2),
            doctors_per_clinic: 1,
            contention: Some(0.5),
            relevant_fill: 1.0,
            ..GenProfile::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("could not plant a feasible slot for need ({patient}, {visit}); raise n_slots or horizon_days")]
    Unplantable { patient: String, visit: String },
}

fn check_fraction(name: &str, f: f64) -> Result<(), GenError> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(GenError::InvalidParams(format!("{name} must be in [0, 1], got {f}")))
    }
}

fn validate_params(n_patients: usize, n_clinics: usize, n_slots: usize, prof: &GenProfile) -> Result<(), GenError> {
    if n_patients == 0 || n_clinics == 0 || n_slots == 0 {
        return Err(GenError::InvalidParams("counts must be at least 1".into()));
    }
    for (name, f) in [
        ("disabled_fraction", prof.disabled_fraction),
        ("sensory_fraction", prof.sensory_fraction),
        ("clinic_pref_fraction", prof.clinic_pref_fraction),
        ("doctor_pref_fraction", prof.doctor_pref_fraction),
        ("window_pref_fraction", prof.window_pref_fraction),
        ("chronic_fraction", prof.chronic_fraction),
        ("onsite_only_fraction", prof.onsite_only_fraction),
        ("in_person_fraction", prof.in_person_fraction),
        ("multi_session_fraction", prof.multi_session_fraction),
        ("override_fraction", prof.override_fraction),
        ("inaccessible_fraction", prof.inaccessible_fraction),
        ("relevant_fill", prof.relevant_fill),
    ] {
        check_fraction(name, f)?;
    }
    if prof.visit_types == 0 || prof.horizon_days == 0 || prof.doctors_per_clinic == 0 {
        return Err(GenError::InvalidParams(
            "visit_types, horizon_days and doctors_per_clinic must be at least 1".into(),
        ));
    }
    if prof.urgency_weights.iter().all(|&w| w == 0) {
        return Err(GenError::InvalidParams("urgency_weights are all zero".into()));
    }
    if let Some(t) = prof.budget_tightness {
        if !(t >= 1.0 && t.is_finite()) {
            return Err(GenError::InvalidParams(format!(
                "budget_tightness must be >= 1, got {t}"
            )));
        }
    }
    if prof.epoch < 0 {
        return Err(GenError::InvalidParams("epoch must be non-negative".into()));
    }
    Ok(())
}

fn grid_time(prof: &GenProfile, g: i64) -> SlotTime {
    prof.epoch + (g / GRID_PER_DAY) * SECONDS_PER_DAY + GRID_START_HOUR * 3600 + (g % GRID_PER_DAY) * GRID_STEP
}

// Index draws go through u64 so 32- and 64-bit targets see the same stream.
fn index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    rng.gen_range(0..n as u64) as usize
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[index(rng, items.len())])
    }
}

/// `k` distinct items in draw order (partial Fisher-Yates).
fn sample<T: Clone>(rng: &mut ChaCha8Rng, items: &[T], k: usize) -> Vec<T> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    let k = k.min(idx.len());
    for i in 0..k {
        let j = i + index(rng, idx.len() - i);
        idx.swap(i, j);
    }
    idx[..k].iter().map(|&i| items[i].clone()).collect()
}

fn grid_len(prof: &GenProfile) -> i64 {
    i64::from(prof.horizon_days) * GRID_PER_DAY
}

pub fn generate(
    seed: u64,
    n_patients: usize,
    n_clinics: usize,
    n_slots: usize,
    prof: &GenProfile,
) -> Result<Instance, GenError> {
    validate_params(n_patients, n_clinics, n_slots, prof)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = Instance::new();
    inst.current_time = Some(prof.epoch);

    // visit types
    for i in 0..prof.visit_types {
        let (spec, cond) = SPECIALTIES[i % SPECIALTIES.len()];
        let mut v = VisitType::new(format!("v{}", i + 1), spec);
        v.condition_label = cond.to_string();
        v.chronic = rng.gen_bool(prof.chronic_fraction);
        v.onsite_only = rng.gen_bool(prof.onsite_only_fraction);
        v.in_person = v.onsite_only || rng.gen_bool(prof.in_person_fraction);
        v.cost = if v.chronic {
            rng.gen_range(50..=300)
        } else {
            rng.gen_range(0..=200)
        };
        if rng.gen_bool(prof.multi_session_fraction) {
            v.required_sessions = 2;
            let min = rng.gen_range(1..=2u32);
            v.session_interval = Some(SessionInterval {
                min_days: min,
                max_days: min + rng.gen_range(0..=2),
            });
        }
        inst.add_visit_type(v);
    }

    // clinics: the first is always physical and accessible
    let n_virtual = if prof.virtual_clinics && n_clinics >= 3 { 2 } else { 0 };
    for i in 0..n_clinics {
        let id = format!("c{}", i + 1);
        let mut c = if i + n_virtual == n_clinics {
            Clinic::new(id.as_str(), Modality::Telemedicine)
        } else if i + n_virtual == n_clinics + 1 {
            Clinic::new(id.as_str(), Modality::HomeCare)
        } else {
            let mut c = Clinic::physical(id.as_str(), &format!("Clinic {}", i + 1));
            c.accessible = i == 0 || !rng.gen_bool(prof.inaccessible_fraction);
            for _ in 0..prof.env_windows_per_clinic {
                let g = rng.gen_range(0..grid_len(prof));
                let start = grid_time(prof, g);
                c.env_conditions.push(EnvCondition {
                    condition_type: pick(&mut rng, CONDITIONS).unwrap().to_string(),
                    level: rng.gen_range(1..=3),
                    start,
                    end: start + rng.gen_range(1..=4) * 3600,
                });
            }
            c
        };
        if !c.modality.is_physical() {
            c.accessible = true;
        }
        inst.add_clinic(c);
    }
    let clinic_ids: Vec<_> = inst.clinics.keys().cloned().collect();
    let physical: Vec<_> = inst
        .clinics
        .values()
        .filter(|c| c.modality.is_physical())
        .map(|c| c.id.clone())
        .collect();

    // doctors
    let n_doctors = n_clinics * prof.doctors_per_clinic;
    for i in 0..n_doctors {
        let mut d = Doctor::new(format!("m{}", i + 1), pick(&mut rng, DOCTOR_TYPES).unwrap());
        d.given_name = pick(&mut rng, GIVEN).unwrap().to_string();
        d.family_name = pick(&mut rng, FAMILY).unwrap().to_string();
        d.age = rng.gen_range(30..=65);
        d.city = pick(&mut rng, CITIES).unwrap().to_string();
        for _ in 0..rng.gen_range(1..=2) {
            let (spec, _) = SPECIALTIES[index(&mut rng, prof.visit_types.min(SPECIALTIES.len()))];
            d = d.with_experience(spec, rng.gen_range(0..=30));
        }
        inst.add_doctor(d);
    }
    let doctor_ids: Vec<_> = inst.doctors.keys().cloned().collect();
    let visit_ids: Vec<_> = inst.visit_types.keys().cloned().collect();

    // how many needs each patient gets
    let mut need_counts = vec![1usize; n_patients];
    if let Some(ratio) = prof.contention {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(GenError::InvalidParams(format!(
                "contention must be positive, got {ratio}"
            )));
        }
        let target = (ratio * n_slots as f64).ceil() as usize;
        let mut extra = target.saturating_sub(n_patients);
        let mut i = 0;
        while extra > 0 {
            if need_counts.iter().all(|&c| c >= prof.visit_types) {
                return Err(GenError::InvalidParams(format!(
                    "contention {ratio} needs {target} needs but only {} are representable",
                    n_patients * prof.visit_types
                )));
            }
            if need_counts[i] < prof.visit_types {
                need_counts[i] += 1;
                extra -= 1;
            }
            i = (i + 1) % n_patients;
        }
    }
    let total_weight: u32 = prof.urgency_weights.iter().sum();

    // patients
    for (i, &n_needs) in need_counts.iter().enumerate() {
        let mut p = Patient::new(
            format!("p{}", i + 1),
            pick(&mut rng, GIVEN).unwrap(),
            pick(&mut rng, FAMILY).unwrap(),
        );
        p.city = Some(pick(&mut rng, CITIES).unwrap().to_string());
        p.disabled = rng.gen_bool(prof.disabled_fraction);
        for c in &physical {
            p.distances
                .insert(c.clone(), rng.gen_range(1..=prof.max_distance.max(1)));
        }
        if rng.gen_bool(prof.clinic_pref_fraction) {
            p.clinic_prefs.insert(pick(&mut rng, &clinic_ids).unwrap().clone());
        }
        if rng.gen_bool(prof.sensory_fraction) {
            p.sensory_prefs.insert(pick(&mut rng, CONDITIONS).unwrap().to_string());
        }
        if rng.gen_bool(prof.doctor_pref_fraction) {
            let (spec, _) = SPECIALTIES[index(&mut rng, prof.visit_types.min(SPECIALTIES.len()))];
            p.doctor_prefs.push(DoctorPreference {
                doctor_type: pick(&mut rng, DOCTOR_TYPES).unwrap().to_string(),
                specialization: spec.to_string(),
                required_years: rng.gen_range(0..=15),
            });
        }
        if rng.gen_bool(prof.window_pref_fraction) {
            let start = rng.gen_range(8..=14) * 100;
            let clinic = if rng.gen_bool(0.5) {
                Some(pick(&mut rng, &clinic_ids).unwrap().clone())
            } else {
                None
            };
            p.time_window_prefs.push(TimeWindowPreference {
                clinic,
                start,
                end: start + rng.gen_range(1..=4) * 100,
            });
        }
        let visits: Vec<_> = sample(&mut rng, &visit_ids, n_needs);
        for v in visits {
            let r = rng.gen_range(0..total_weight);
            let level = if r < prof.urgency_weights[0] {
                1
            } else if r < prof.urgency_weights[0] + prof.urgency_weights[1] {
                2
            } else {
                3
            };
            if inst.required_sessions(&v) > 1 && rng.gen_bool(prof.override_fraction) {
                let min = rng.gen_range(1..=2u32);
                p.session_overrides.insert(
                    v.clone(),
                    SessionInterval {
                        min_days: min,
                        max_days: min + rng.gen_range(0..=1),
                    },
                );
            }
            p.needs.push(Need {
                visit: v,
                urgency: Urgency::new(level).expect("level in range"),
            });
        }
        inst.add_patient(p);
    }

    // planted witness
    let mut order: Vec<(usize, usize)> = inst
        .patients
        .values()
        .enumerate()
        .flat_map(|(pi, p)| (0..p.needs.len()).map(move |ni| (pi, ni)))
        .collect();
    order.sort_by_key(|&(pi, ni)| std::cmp::Reverse(inst.patients[pi].needs[ni].urgency));

    let mut slots: BTreeSet<AvailabilitySlot> = BTreeSet::new();
    let mut triple_last: BTreeMap<(usize, usize, usize), i64> = BTreeMap::new();
    let mut busy: HashSet<(String, SlotTime)> = HashSet::new();
    let mut spend: BTreeMap<usize, u64> = BTreeMap::new();
    let horizon = grid_len(prof);
    for (pi, ni) in order {
        let p = &inst.patients[pi];
        let need = &p.needs[ni];
        let visit = &inst.visit_types[&need.visit];
        let vi = inst.visit_types.get_index_of(&need.visit).unwrap();
        let sessions = visit.required_sessions as i64;
        let interval = inst.session_interval(&p.id, &need.visit);
        let compatible: Vec<usize> = (0..n_clinics)
            .filter(|&ci| {
                let c = &inst.clinics[ci];
                visit.allows(&c.modality) && (!p.disabled || c.accessible)
            })
            .collect();
        let mut planted = None;
        for _ in 0..64 {
            let ci = *pick(&mut rng, &compatible).expect("first clinic is always compatible");
            let di = index(&mut rng, n_doctors);
            let lo = triple_last.get(&(ci, di, vi)).map_or(0, |&g| g + 1);
            let gap_days = interval.map_or(0, |iv| rng.gen_range(iv.min_days..=iv.max_days) as i64);
            let span = (sessions - 1) * gap_days * GRID_PER_DAY;
            if lo + span >= horizon {
                continue;
            }
            let g0 = rng.gen_range(lo..horizon - span);
            let gs: Vec<i64> = (0..sessions).map(|k| g0 + k * gap_days * GRID_PER_DAY).collect();
            let doctor = doctor_ids[di].as_str();
            if gs.iter().any(|&g| {
                let t = grid_time(prof, g);
                busy.contains(&(doctor.to_string(), t)) || busy.contains(&(p.id.to_string(), t))
            }) {
                continue;
            }
            if gs.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            planted = Some((ci, di, gs));
            break;
        }
        let Some((ci, di, gs)) = planted else {
            return Err(GenError::Unplantable {
                patient: p.id.to_string(),
                visit: need.visit.to_string(),
            });
        };
        for &g in &gs {
            let t = grid_time(prof, g);
            busy.insert((doctor_ids[di].to_string(), t));
            busy.insert((p.id.to_string(), t));
            slots.insert(AvailabilitySlot {
                clinic: clinic_ids[ci].clone(),
                doctor: doctor_ids[di].clone(),
                visit: need.visit.clone(),
                time: t,
            });
            if visit.chronic {
                *spend.entry(ci).or_insert(0) += visit.cost;
            }
        }
        triple_last.insert((ci, di, vi), *gs.last().unwrap());
    }
    if slots.len() > n_slots {
        return Err(GenError::InvalidParams(format!(
            "{} slots are needed to guarantee feasibility but n_slots is {n_slots}",
            slots.len()
        )));
    }

    // filler
    let needed: Vec<usize> = {
        let set: BTreeSet<usize> = inst
            .patients
            .values()
            .flat_map(|p| p.needs.iter().map(|n| inst.visit_types.get_index_of(&n.visit).unwrap()))
            .collect();
        set.into_iter().collect()
    };
    let mut attempts = 0usize;
    while slots.len() < n_slots {
        attempts += 1;
        if attempts > n_slots * 100 + 1000 {
            return Err(GenError::InvalidParams(format!(
                "cannot fit {n_slots} distinct slots into the horizon"
            )));
        }
        let vi = if rng.gen_bool(prof.relevant_fill) {
            *pick(&mut rng, &needed).unwrap()
        } else {
            index(&mut rng, visit_ids.len())
        };
        let slot = AvailabilitySlot {
            clinic: clinic_ids[index(&mut rng, n_clinics)].clone(),
            doctor: doctor_ids[index(&mut rng, n_doctors)].clone(),
            visit: visit_ids[vi].clone(),
            time: grid_time(prof, rng.gen_range(0..horizon)),
        };
        slots.insert(slot);
    }
    inst.slots = slots.into_iter().collect();

    if let Some(tightness) = prof.budget_tightness {
        for (ci, c) in inst.clinics.values_mut().enumerate() {
            if c.modality.is_physical() {
                let planted = spend.get(&ci).copied().unwrap_or(0);
                c.budget = Some((planted as f64 * tightness).ceil() as u64);
            }
        }
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::emit_facts;
    use crate::validate::validate_instance;

    #[test]
    fn scale_shape() {
        let inst = generate(42, 50, 6, 500, &GenProfile::default()).unwrap();
        assert_eq!(inst.patients.len(), 50);
        assert_eq!(inst.clinics.len(), 6);
        assert_eq!(inst.slots.len(), 500);
        assert!(validate_instance(&inst).is_valid());
        assert_eq!(
            inst.clinics
                .values()
                .filter(|c| c.modality == Modality::Telemedicine)
                .count(),
            1
        );
        assert_eq!(
            inst.clinics
                .values()
                .filter(|c| c.modality == Modality::HomeCare)
                .count(),
            1
        );
    }

    #[test]
    fn minimal_single() {
        let inst = generate(7, 1, 1, 1, &GenProfile::minimal()).unwrap();
        assert_eq!((inst.patients.len(), inst.clinics.len(), inst.slots.len()), (1, 1, 1));
    }

    #[test]
    fn deterministic() {
        let a = generate(42, 20, 4, 100, &GenProfile::default()).unwrap();
        let b = generate(42, 20, 4, 100, &GenProfile::default()).unwrap();
        assert_eq!(emit_facts(&a), emit_facts(&b));
        let c = generate(43, 20, 4, 100, &GenProfile::default()).unwrap();
        assert_ne!(emit_facts(&a), emit_facts(&c));
    }

    #[test]
    fn bad_params() {
        assert!(matches!(
            generate(1, 0, 1, 1, &GenProfile::default()),
            Err(GenError::InvalidParams(_))
        ));
        let prof = GenProfile {
            contention: Some(10.0),
            ..GenProfile::minimal()
        };
        assert!(matches!(generate(1, 2, 1, 10, &prof), Err(GenError::InvalidParams(_))));
        assert!(generate(1, 5, 1, 2, &GenProfile::minimal()).is_err());
    }
}
