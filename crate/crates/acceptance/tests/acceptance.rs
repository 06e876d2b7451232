//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use medsched_core::constraints::{check_all, check_double_booking, check_urgency_order, CheckMode, ViolationCode};
use medsched_core::domain::{Appointment, Instance};
use medsched_core::facts::{emit_facts, parse_facts, parse_schedule, ParseMode};
use medsched_core::generator::{generate, GenProfile};
use medsched_core::json::{emit_json, parse_json};
use medsched_core::objective::{score_schedule, ObjectiveWeights};
use medsched_core::oracle::{enumerate_optimal, search_space, DEFAULT_CAP};
use medsched_core::solver::{solve_exact, solve_greedy_first_available, SolveOptions, SolveStatus};
use medsched_core::validate::validate_instance;
use medsched_service::{Config, RequestStatus, Scheduler, SubmitPayload};

// Pinned thresholds.
const ORACLE_INSTANCES: usize = 200;
const ORACLE_MAX_RUNTIME: Duration = Duration::from_secs(600);
const SCENARIO1_MAX_SOLVE: Duration = Duration::from_millis(100);
const SCALE_MAX_SOLVE: Duration = Duration::from_secs(5);
const SCALE_MAX_CANDIDATES: usize = 10_000;
const GREEDY_INSTANCES: u64 = 100;
const GREEDY_MIN_STRICT_FRACTION: f64 = 0.30;
const ROUNDTRIP_INSTANCES: u64 = 1000;
const SERVICE_REQUESTS: usize = 10;
const SERVICE_TICKS: usize = 3;

const SCENARIO1_LISTING: &str = include_str!("../../core/fixtures/scenario1.lp");
const SCENARIO2_LISTING: &str = include_str!("../../core/fixtures/scenario2.lp");
const SCENARIO3_LISTING: &str = include_str!("../../core/fixtures/scenario3.lp");
const SCENARIO1: &str = include_str!("../../core/fixtures/scenario1_completed.lp");
const SCENARIO2: &str = include_str!("../../core/fixtures/scenario2_corrected.lp");
const SCENARIO3: &str = include_str!("../../core/fixtures/scenario3_completed.lp");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn load(text: &str) -> Result<Instance, String> {
    let parsed = parse_facts(text, ParseMode::Strict).map_err(|e| e.to_string())?;
    let report = validate_instance(&parsed.instance);
    ensure!(report.is_valid(), "fixture does not validate: {:?}", report.codes());
    Ok(parsed.instance)
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn oracle_agrees(inst: &Instance, mode: CheckMode) -> Result<Option<Vec<Appointment>>, String> {
    let o = enumerate_optimal(inst, &ObjectiveWeights::default(), mode, DEFAULT_CAP).map_err(|e| e.to_string())?;
    let r = solve_exact(inst, &SolveOptions { mode, ..opts() }).map_err(|e| e.to_string())?;
    let got = r.schedule.as_ref().map(|s| s.appointments.clone());
    match (o.optimum, &got) {
        (None, None) => {
            ensure!(
                r.status == SolveStatus::Infeasible,
                "status {:?} on an infeasible instance",
                r.status
            );
        }
        (Some(best), Some(appts)) => {
            ensure!(r.status == SolveStatus::Optimal, "status {:?}", r.status);
            ensure!(
                r.objective == Some(best),
                "objective {:?} != oracle {best}",
                r.objective
            );
            ensure!(o.optimal.contains(appts), "schedule not in the oracle argmin set");
            ensure!(
                check_all(inst, appts, mode).map_err(|e| e.to_string())?.is_empty(),
                "schedule violates a rule"
            );
        }
        (a, b) => return Err(format!("oracle optimum {a:?}, solver schedule {}", b.is_some())),
    }
    Ok(got)
}

/// Small instances with every rule in play; some are made infeasible by
/// dropping a slot or squeezing budgets.
fn small_instance(seed: u64) -> Option<Instance> {
    let np = 1 + (seed % 4) as usize;
    let nc = 1 + (seed / 4 % 3) as usize;
    let mut inst = generate(seed, np, nc, 8, &GenProfile::small()).ok()?;
    if seed.is_multiple_of(3) && inst.slots.len() > 1 {
        let i = (seed / 3) as usize % inst.slots.len();
        inst.slots.remove(i);
    }
    if seed.is_multiple_of(5) {
        for c in inst.clinics.values_mut() {
            if let Some(b) = &mut c.budget {
                *b /= 2;
            }
        }
    }
    Some(inst)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (mut checked, mut infeasible, mut too_large, mut seed) = (0usize, 0usize, 0usize, 0u64);
    while checked < ORACLE_INSTANCES {
        seed += 1;
        ensure!(
            seed < 10 * ORACLE_INSTANCES as u64,
            "ran out of seeds after {checked} instances"
        );
        let Some(inst) = small_instance(seed) else { continue };
        if search_space(&inst) > DEFAULT_CAP {
            too_large += 1;
            continue;
        }
        let mode = if seed % 2 == 0 {
            CheckMode::Strict
        } else {
            CheckMode::Faithful
        };
        let got = oracle_agrees(&inst, mode).map_err(|e| format!("seed {seed} ({mode:?}): {e}"))?;
        infeasible += usize::from(got.is_none());
        checked += 1;
    }
    let took = start.elapsed();
    ensure!(took <= ORACLE_MAX_RUNTIME, "took {took:?}");
    Ok(format!(
        "{checked} instances ({infeasible} infeasible, {too_large} skipped above the oracle cap), 0 mismatches, {:.1}s",
        took.as_secs_f64()
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let inst = load(SCENARIO1)?;
    let r = solve_exact(&inst, &opts()).map_err(|e| e.to_string())?;
    let wall = start.elapsed();
    ensure!(r.status == SolveStatus::Optimal, "status {:?}", r.status);
    let expected = parse_schedule("appointment(p1, c3, m1, v1, 1727308800).").unwrap();
    let got = r.schedule.as_ref().map(|s| s.appointments.clone()).unwrap_or_default();
    ensure!(got == expected, "schedule {got:?}");
    ensure!(wall <= SCENARIO1_MAX_SOLVE, "parse and solve took {wall:?}");
    oracle_agrees(&inst, CheckMode::Faithful)?;
    Ok(format!(
        "(p1, c3, m1, v1, 1727308800) Optimal, parse and solve in {wall:?}"
    ))
}

fn criterion_3() -> Outcome {
    let inst = load(SCENARIO3)?;
    let r = solve_exact(&inst, &opts()).map_err(|e| e.to_string())?;
    let schedule = r.schedule.ok_or("no schedule")?;
    let earliest = inst.min_slot_time().unwrap();
    let top = schedule
        .appointments
        .iter()
        .find(|a| a.patient.as_str() == "p1")
        .ok_or("p1 unscheduled")?;
    ensure!(top.time == earliest, "urgency-3 patient at {} not {earliest}", top.time);
    ensure!(
        check_urgency_order(&inst, &schedule.appointments).is_empty(),
        "urgency order violated"
    );
    ensure!(
        schedule.appointments.len() == 5,
        "{} appointments",
        schedule.appointments.len()
    );
    oracle_agrees(&inst, CheckMode::Faithful)?;
    Ok(format!(
        "p1 earliest, urgency order holds, oracle-optimal objective {}",
        schedule.objective
    ))
}

fn criterion_4() -> Outcome {
    let inst = load(SCENARIO2)?;
    let got = oracle_agrees(&inst, CheckMode::Faithful)?.ok_or("infeasible")?;
    ensure!(got.len() == 1 && got[0].clinic.as_str() == "c3", "chose {got:?}");
    // the Clinic B (c4) outcome scores worse under the default weights
    let mut clinic_b = got[0].clone();
    clinic_b.clinic = "c4".into();
    let w = ObjectiveWeights::default();
    let ours = score_schedule(&inst, &got, &w).map_err(|e| e.to_string())?.objective;
    let theirs = score_schedule(&inst, &[clinic_b], &w)
        .map_err(|e| e.to_string())?
        .objective;
    ensure!(theirs > ours, "Clinic B outcome is not worse: {theirs} vs {ours}");
    Ok(format!(
        "c3 at {ours} matches oracle; Clinic B scores {theirs} (distance dominates)"
    ))
}

fn criterion_5() -> Outcome {
    let inst = generate(42, 50, 6, 500, &GenProfile::default()).map_err(|e| e.to_string())?;
    ensure!(
        inst.patients.len() == 50 && inst.clinics.len() == 6 && inst.slots.len() == 500,
        "wrong shape"
    );
    let r = solve_exact(
        &inst,
        &SolveOptions {
            time_budget: SCALE_MAX_SOLVE,
            ..opts()
        },
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        r.status == SolveStatus::Optimal,
        "status {:?} after {:?}",
        r.status,
        r.elapsed
    );
    ensure!(r.elapsed <= SCALE_MAX_SOLVE, "took {:?}", r.elapsed);
    ensure!(r.candidates < SCALE_MAX_CANDIDATES, "{} candidates", r.candidates);
    let s = r.schedule.ok_or("no schedule")?;
    ensure!(
        check_all(&inst, &s.appointments, CheckMode::Faithful)
            .map_err(|e| e.to_string())?
            .is_empty(),
        "infeasible schedule"
    );
    Ok(format!(
        "Optimal in {:.2}s, {} candidates, {} nodes",
        r.elapsed.as_secs_f64(),
        r.candidates,
        r.nodes_explored
    ))
}

fn criterion_6() -> Outcome {
    let (mut strict, mut compared, mut stuck) = (0u64, 0u64, 0u64);
    for seed in 0..GREEDY_INSTANCES {
        let inst = generate(seed, 8, 3, 24, &GenProfile::contention()).map_err(|e| format!("seed {seed}: {e}"))?;
        let exact = solve_exact(&inst, &opts()).map_err(|e| e.to_string())?;
        let greedy = solve_greedy_first_available(&inst, &opts()).map_err(|e| e.to_string())?;
        ensure!(
            exact.status == SolveStatus::Optimal,
            "seed {seed}: exact {:?}",
            exact.status
        );
        compared += 1;
        match (exact.objective, greedy.objective) {
            (Some(e), Some(g)) => {
                ensure!(e <= g, "seed {seed}: exact {e} > greedy {g}");
                strict += u64::from(e < g);
            }
            (Some(_), None) => {
                strict += 1;
                stuck += 1;
            }
            (e, g) => return Err(format!("seed {seed}: exact {e:?}, greedy {g:?}")),
        }
    }
    let fraction = strict as f64 / compared as f64;
    ensure!(
        fraction >= GREEDY_MIN_STRICT_FRACTION,
        "strict improvement in only {:.0}%",
        fraction * 100.0
    );
    Ok(format!(
        "exact <= greedy on {compared}/{compared}, strictly better on {:.0}% (greedy stuck on {stuck})",
        fraction * 100.0
    ))
}

const NEG_BASE: &str = r#"
doctor(m1, "Marco", "Bianchi", 52, "L'Aquila", "GP").
clinic(c1, "Clinic A").
patient(p1, "Mario", "Rossi"). distance(p1, c1, 3).
availability(c1, m1, v1, 1727308800).
"#;

struct NegCase {
    code: ViolationCode,
    facts: &'static str,
    schedule: &'static str,
    sibling_facts: &'static str,
    sibling_schedule: &'static str,
}

fn negative_cases() -> Vec<NegCase> {
    vec![
        NegCase {
            code: ViolationCode::SessionCount,
            facts: r#"accessible(c1). visit_type(v1, "Cardiology", "x", 0, 0, 0). need(p1, v1, 2)."#,
            schedule: "",
            sibling_facts: r#"accessible(c1). visit_type(v1, "Cardiology", "x", 0, 0, 0). need(p1, v1, 2)."#,
            sibling_schedule: "appointment(p1, c1, m1, v1, 1727308800).",
        },
        NegCase {
            code: ViolationCode::DoubleBooking,
            facts: r#"accessible(c1). visit_type(v1, "Cardiology", "x", 0, 0, 0). need(p1, v1, 2).
                patient(p2, "Giulia", "Bianchi"). need(p2, v1, 2). availability(c1, m1, v1, 1727312400)."#,
            schedule: "appointment(p1, c1, m1, v1, 1727308800). appointment(p2, c1, m1, v1, 1727308800).",
            sibling_facts: r#"accessible(c1). visit_type(v1, "Cardiology", "x", 0, 0, 0). need(p1, v1, 2).
                patient(p2, "Giulia", "Bianchi"). need(p2, v1, 2). availability(c1, m1, v1, 1727312400)."#,
            sibling_schedule: "appointment(p1, c1, m1, v1, 1727308800). appointment(p2, c1, m1, v1, 1727312400).",
        },
        NegCase {
            code: ViolationCode::UrgencyOrder,
            facts: r#"accessible(c1). visit_type(v1, "Cardiology", "x", 0, 0, 0). need(p1, v1, 3).
                patient(p2, "Giulia", "Bianchi"). need(p2, v1, 1). availability(c1, m1, v1, 1727312400)."#,
            schedule: "appointment(p1, c1, m1, v1, 1727312400). appointment(p2, c1, m1, v1, 1727308800).",
            sibling_facts: r#"accessible(c1). visit_type(v1, "Cardiology", "x", 0, 0, 0). need(p1, v1, 1).
                patient(p2, "Giulia", "Bianchi"). need(p2, v1, 1). availability(c1, m1, v1, 1727312400)."#,
            sibling_schedule: "appointment(p1, c1, m1, v1, 1727312400). appointment(p2, c1, m1, v1, 1727308800).",
        },
        NegCase {
            code: ViolationCode::Accessibility,
            facts: r#"disabled(p1). visit_type(v1, "Cardiology", "x", 0, 0, 0). need(p1, v1, 2)."#,
            schedule: "appointment(p1, c1, m1, v1, 1727308800).",
            sibling_facts: r#"disabled(p1). accessible(c1). visit_type(v1, "Cardiology", "x", 0, 0, 0). need(p1, v1, 2)."#,
            sibling_schedule: "appointment(p1, c1, m1, v1, 1727308800).",
        },
        NegCase {
            code: ViolationCode::Budget,
            facts: r#"accessible(c1). visit_type(v1, "Diabetes", "x", 1, 0, 0). visit_cost(v1, 100). budget(c1, 50). need(p1, v1, 2)."#,
            schedule: "appointment(p1, c1, m1, v1, 1727308800).",
            sibling_facts: r#"accessible(c1). visit_type(v1, "Diabetes", "x", 1, 0, 0). visit_cost(v1, 100). budget(c1, 100). need(p1, v1, 2)."#,
            sibling_schedule: "appointment(p1, c1, m1, v1, 1727308800).",
        },
        NegCase {
            code: ViolationCode::Modality,
            facts: r#"clinic(c2, "Telemedicine"). accessible(c1). visit_type(v1, "Cardiology", "x", 0, 0, 1). need(p1, v1, 2).
                availability(c2, m1, v1, 1727312400)."#,
            schedule: "appointment(p1, c2, m1, v1, 1727312400).",
            sibling_facts: r#"clinic(c2, "Telemedicine"). accessible(c1). visit_type(v1, "Cardiology", "x", 0, 0, 0). need(p1, v1, 2).
                availability(c2, m1, v1, 1727312400)."#,
            sibling_schedule: "appointment(p1, c2, m1, v1, 1727312400).",
        },
        NegCase {
            code: ViolationCode::SessionSpacing,
            facts: r#"accessible(c1). visit_type(v1, "Physiotherapy", "x", 0, 0, 0). required_sessions(v1, 2).
                session_interval(v1, 2, 5). need(p1, v1, 2). availability(c1, m1, v1, 1727395200)."#,
            schedule: "appointment(p1, c1, m1, v1, 1727308800). appointment(p1, c1, m1, v1, 1727395200).",
            sibling_facts: r#"accessible(c1). visit_type(v1, "Physiotherapy", "x", 0, 0, 0). required_sessions(v1, 2).
                session_interval(v1, 1, 5). need(p1, v1, 2). availability(c1, m1, v1, 1727395200)."#,
            sibling_schedule: "appointment(p1, c1, m1, v1, 1727308800). appointment(p1, c1, m1, v1, 1727395200).",
        },
    ]
}

fn fact_set(text: &str) -> BTreeSet<String> {
    text.split('.')
        .map(|f| f.split_whitespace().collect::<String>())
        .filter(|f| !f.is_empty())
        .collect()
}

fn criterion_7() -> Outcome {
    let cases = negative_cases();
    for case in &cases {
        let name = case.code.as_str();
        let diff = fact_set(case.facts)
            .symmetric_difference(&fact_set(case.sibling_facts))
            .count()
            + fact_set(case.schedule)
                .symmetric_difference(&fact_set(case.sibling_schedule))
                .count();
        ensure!(diff <= 2, "{name}: sibling differs in more than one fact");
        for (facts, schedule, expect) in [
            (case.facts, case.schedule, vec![case.code]),
            (case.sibling_facts, case.sibling_schedule, vec![]),
        ] {
            let inst = load(&format!("{NEG_BASE}{facts}")).map_err(|e| format!("{name}: {e}"))?;
            let appts = parse_schedule(schedule).map_err(|e| format!("{name}: {e}"))?;
            let codes: Vec<ViolationCode> = check_all(&inst, &appts, CheckMode::Faithful)
                .map_err(|e| format!("{name}: {e}"))?
                .iter()
                .map(|v| v.code)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            ensure!(codes == expect, "{name}: got {codes:?}, expected {expect:?}");
        }
    }
    Ok(format!("{} codes, each isolated, each sibling clean", cases.len()))
}

fn criterion_8() -> Outcome {
    let profiles = [
        GenProfile::default(),
        GenProfile::small(),
        GenProfile::contention(),
        GenProfile::minimal(),
    ];
    let (mut done, mut seed) = (0u64, 0u64);
    while done < ROUNDTRIP_INSTANCES {
        seed += 1;
        ensure!(seed < 4 * ROUNDTRIP_INSTANCES, "generator failed too often");
        let prof = &profiles[(seed % 4) as usize];
        let n = 1 + (seed % 7) as usize;
        let Ok(inst) = generate(seed, n, 1 + (seed % 5) as usize, 8 * n + 10, prof) else {
            continue;
        };
        let canon = inst.canonical();
        let facts = parse_facts(&emit_facts(&inst), ParseMode::Strict).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(
            facts.instance.canonical() == canon,
            "seed {seed}: fact roundtrip differs"
        );
        let json = parse_json(&emit_json(&inst)).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(json.canonical() == canon, "seed {seed}: JSON roundtrip differs");
        done += 1;
    }
    let mut warned = 0;
    for (name, listing) in [
        ("1", SCENARIO1_LISTING),
        ("2", SCENARIO2_LISTING),
        ("3", SCENARIO3_LISTING),
    ] {
        let parsed = parse_facts(listing, ParseMode::Lenient).map_err(|e| format!("listing {name}: {e}"))?;
        warned += parsed.warnings.len();
    }
    Ok(format!(
        "{done} instances x 2 formats; 3 original scenario files parse leniently ({warned} warnings)"
    ))
}

fn requests_from(inst: &Instance, tag: &str) -> Vec<SubmitPayload> {
    inst.patients
        .values()
        .map(|p| {
            let mut patient = p.clone();
            patient.id = format!("{}-{tag}", p.id).into();
            SubmitPayload {
                patient,
                idempotency_key: Some(format!("{}-{tag}", p.id)),
            }
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let journal = dir.path().join("journal.jsonl");
    let catalog = generate(9, SERVICE_REQUESTS, 3, 80, &GenProfile::default()).map_err(|e| e.to_string())?;
    let now = catalog.current_time.unwrap();
    let err = |e: medsched_service::ServiceError| e.to_string();

    let mut svc = Scheduler::open(catalog.clone(), Config::default(), &journal).map_err(err)?;
    let mut ids = Vec::new();
    for (i, payload) in requests_from(&catalog, "a").into_iter().enumerate() {
        let body = serde_json_string(&payload);
        let (id, created) = svc.submit_json(&body, None, now - 100 + i as i64).map_err(err)?;
        ensure!(created, "request {i} not created");
        ensure!(
            svc.status(&id).map_err(err)?.status == RequestStatus::Queued,
            "{id} not queued"
        );
        ids.push(id);
    }
    ensure!(ids.len() == SERVICE_REQUESTS, "submitted {}", ids.len());
    let report = svc.tick(now).map_err(err)?;
    ensure!(report.batch_size == SERVICE_REQUESTS, "batch of {}", report.batch_size);
    for id in &ids {
        let status = &svc.status(id).map_err(err)?.status;
        ensure!(matches!(status, RequestStatus::Scheduled { .. }), "{id}: {status:?}");
    }
    let (inst, appts) = svc.committed_instance();
    let violations = check_all(&inst, &appts, CheckMode::Faithful).map_err(|e| e.to_string())?;
    ensure!(
        violations.is_empty(),
        "committed schedule violates {:?}",
        violations[0].code
    );

    for t in 0..SERVICE_TICKS {
        for payload in requests_from(&catalog, &format!("t{t}")) {
            svc.submit(payload, now + t as i64).map_err(err)?;
        }
        svc.tick(now + t as i64 + 1).map_err(err)?;
        let (inst, appts) = svc.committed_instance();
        ensure!(
            check_double_booking(&inst, &appts, CheckMode::Faithful).is_empty(),
            "double booking after tick {t}"
        );
        ensure!(
            svc.state().requests.values().all(|r| r.status.is_final()),
            "unfinished request after tick {t}"
        );
    }

    let before = svc.state().clone();
    drop(svc);
    let replayed = Scheduler::open(catalog, Config::default(), &journal).map_err(err)?;
    ensure!(replayed.state() == &before, "journal replay differs");
    let scheduled = before
        .requests
        .values()
        .filter(|r| matches!(r.status, RequestStatus::Scheduled { .. }))
        .count();
    Ok(format!(
        "{SERVICE_REQUESTS} scheduled in one tick; {} requests over {} ticks, {scheduled} scheduled, no double booking; replay identical",
        before.requests.len(),
        before.ticks
    ))
}

fn serde_json_string(p: &SubmitPayload) -> String {
    serde_json::to_string(p).expect("payload serializes")
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", criterion_1),
        ("scenario 1 reproduction", criterion_2),
        ("scenario 3 properties", criterion_3),
        ("scenario 2 weight consistency", criterion_4),
        ("scale 50/6/500", criterion_5),
        ("greedy dominance", criterion_6),
        ("constraint negative suite", criterion_7),
        ("parser roundtrips", criterion_8),
        ("service end-to-end", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name} [{secs:.2}s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} [{secs:.2}s]: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
