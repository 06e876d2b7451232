use medsched_core::constraints::{check_all, CheckMode};
use medsched_core::domain::Instance;
use medsched_core::generator::{generate, GenProfile};
use medsched_core::objective::{score_schedule, ObjectiveWeights};
use medsched_core::oracle::{enumerate_optimal, search_space, DEFAULT_CAP};
use medsched_core::solver::{solve_exact, solve_greedy_first_available, SolveOptions, SolveStatus};
use proptest::prelude::*;

fn small(seed: u64, np: usize, nc: usize, ns: usize) -> Option<Instance> {
    generate(seed, np, nc, ns, &GenProfile::small()).ok()
}

fn mode(strict: bool) -> CheckMode {
    if strict {
        CheckMode::Strict
    } else {
        CheckMode::Faithful
    }
}

/// Reverses patient, clinic and slot order without changing the problem.
fn permuted(inst: &Instance, rotate: usize) -> Instance {
    let mut out = inst.clone();
    out.patients.reverse();
    out.clinics.reverse();
    out.doctors.reverse();
    out.slots.reverse();
    if !out.slots.is_empty() {
        let k = rotate % out.slots.len();
        out.slots.rotate_left(k);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_are_feasible_and_scored_consistently(seed in 0u64..5000, np in 1usize..6, nc in 1usize..4, strict: bool) {
        let Some(inst) = small(seed, np, nc, 14) else { return Ok(()) };
        let opts = SolveOptions { mode: mode(strict), ..SolveOptions::default() };
        let r = solve_exact(&inst, &opts).unwrap();
        prop_assert_ne!(r.status, SolveStatus::FeasibleTimeout);
        if let Some(s) = &r.schedule {
            prop_assert!(check_all(&inst, &s.appointments, mode(strict)).unwrap().is_empty());
            let rescored = score_schedule(&inst, &s.appointments, &opts.weights).unwrap();
            prop_assert_eq!(r.objective, Some(rescored.objective));
            prop_assert_eq!(s.objective, rescored.objective);
        } else {
            prop_assert_eq!(r.status, SolveStatus::Infeasible);
        }
    }

    #[test]
    fn matches_oracle(seed in 0u64..5000, np in 1usize..4, nc in 1usize..3, strict: bool) {
        let Some(inst) = small(seed, np, nc, 8) else { return Ok(()) };
        prop_assume!(search_space(&inst) <= DEFAULT_CAP);
        let o = enumerate_optimal(&inst, &ObjectiveWeights::default(), mode(strict), DEFAULT_CAP).unwrap();
        let r = solve_exact(&inst, &SolveOptions { mode: mode(strict), ..SolveOptions::default() }).unwrap();
        prop_assert_eq!(r.objective, o.optimum);
        let got = r.schedule.map(|s| s.appointments);
        prop_assert_eq!(got.as_deref(), o.lex_smallest());
    }

    #[test]
    fn invariant_under_declaration_order(seed in 0u64..5000, np in 1usize..6, nc in 1usize..4, rotate in 0usize..50) {
        let Some(inst) = small(seed, np, nc, 14) else { return Ok(()) };
        let opts = SolveOptions::default();
        let a = solve_exact(&inst, &opts).unwrap();
        let b = solve_exact(&permuted(&inst, rotate), &opts).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.objective, b.objective);
        prop_assert_eq!(a.schedule.map(|s| s.appointments), b.schedule.map(|s| s.appointments));
    }

    #[test]
    fn deterministic(seed in 0u64..5000, np in 1usize..6) {
        let Some(inst) = small(seed, np, 3, 16) else { return Ok(()) };
        let opts = SolveOptions::default();
        let a = solve_exact(&inst, &opts).unwrap();
        let b = solve_exact(&inst, &opts).unwrap();
        prop_assert_eq!(a.schedule, b.schedule);
        prop_assert_eq!(a.nodes_explored, b.nodes_explored);
    }

    #[test]
    fn exact_never_worse_than_greedy(seed in 0u64..5000, np in 1usize..9) {
        let Ok(inst) = generate(seed, np, 3, 3 * np + 6, &GenProfile::contention()) else { return Ok(()) };
        let opts = SolveOptions::default();
        let exact = solve_exact(&inst, &opts).unwrap();
        let greedy = solve_greedy_first_available(&inst, &opts).unwrap();
        if let Some(g) = &greedy.schedule {
            prop_assert!(check_all(&inst, &g.appointments, CheckMode::Faithful).unwrap().is_empty());
            prop_assert!(exact.objective.unwrap() <= g.objective);
        }
        if exact.status == SolveStatus::Infeasible {
            prop_assert!(greedy.schedule.is_none());
        }
    }

    #[test]
    fn strict_is_never_cheaper_than_faithful(seed in 0u64..5000, np in 1usize..5) {
        let Some(inst) = small(seed, np, 2, 12) else { return Ok(()) };
        let f = solve_exact(&inst, &SolveOptions::default()).unwrap();
        let s = solve_exact(&inst, &SolveOptions { mode: CheckMode::Strict, ..SolveOptions::default() }).unwrap();
        match (f.objective, s.objective) {
            (Some(a), Some(b)) => prop_assert!(a <= b),
            (None, Some(_)) => prop_assert!(false, "strict feasible but faithful not"),
            _ => {}
        }
    }
}

#[test]
fn planted_instances_are_solvable() {
    for seed in 0..30 {
        let inst = generate(seed, 12, 4, 120, &GenProfile::default()).unwrap();
        let r = solve_exact(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal, "seed {seed}");
    }
}
