//! `medsched`: solve, check, enumerate and generate scheduling instances.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use medsched_core::constraints::{check_all, CheckMode};
use medsched_core::domain::{Instance, Schedule};
use medsched_core::facts::{emit_facts, emit_schedule, parse_facts, parse_schedule, ParseMode};
use medsched_core::generator::{generate, GenProfile};
use medsched_core::json::{emit_json, parse_json};
use medsched_core::objective::ObjectiveWeights;
use medsched_core::oracle::{enumerate_optimal, DEFAULT_CAP};
use medsched_core::solver::{solve_exact, solve_greedy_first_available, SolveOptions, SolveResult, SolveStatus};
use medsched_core::validate::validate_instance;
use serde_json::json;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_VIOLATIONS: u8 = 1;

#[derive(Parser)]
#[command(name = "medsched", version, about = "Patient appointment scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Find an optimal schedule.
    Solve(SolveArgs),
    /// Check an instance, and optionally a schedule against it.
    Validate(ValidateArgs),
    /// Enumerate every schedule of a small instance and report all optima.
    Oracle(OracleArgs),
    /// Generate a synthetic instance.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Facts,
    Json,
}

#[derive(Args)]
struct InputArgs {
    /// Instance file, or `-` for stdin.
    #[arg(long, short)]
    input: PathBuf,
    /// Input format; inferred from the extension when omitted (.json is JSON).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Fact parsing mode.
    #[arg(long, default_value = "lenient", value_parser = parse_mode)]
    parse: ParseMode,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value = "faithful", value_parser = check_mode)]
    mode: CheckMode,
    /// Objective weights as a JSON object; missing keys keep their defaults.
    #[arg(long, value_parser = weights)]
    weights: Option<ObjectiveWeights>,
    /// Print JSON instead of facts.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Search budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_budget: f64,
    /// Print the per-appointment objective terms.
    #[arg(long)]
    explain: bool,
    /// Also run the first-available greedy baseline and compare.
    #[arg(long)]
    baseline: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Schedule file of `appointment/5` facts to check against the instance.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value = "faithful", value_parser = check_mode)]
    mode: CheckMode,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Maximum number of candidate schedules to enumerate.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u128,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Default,
    Minimal,
    Small,
    Contention,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    patients: usize,
    #[arg(long, default_value_t = 6)]
    clinics: usize,
    #[arg(long, default_value_t = 500)]
    slots: usize,
    #[arg(long, value_enum, default_value = "facts")]
    format: Format,
    /// Base profile; the flags below override single knobs.
    #[arg(long, value_enum, default_value = "default")]
    profile: Profile,
    #[arg(long)]
    disabled_fraction: Option<f64>,
    #[arg(long)]
    sensory_fraction: Option<f64>,
    #[arg(long)]
    clinic_pref_fraction: Option<f64>,
    #[arg(long)]
    doctor_pref_fraction: Option<f64>,
    #[arg(long)]
    window_pref_fraction: Option<f64>,
    /// Relative weights of urgency 1, 2 and 3, e.g. `1,1,2`.
    #[arg(long, value_parser = urgency_weights)]
    urgency_weights: Option<[u32; 3]>,
    #[arg(long)]
    visit_types: Option<usize>,
    #[arg(long)]
    chronic_fraction: Option<f64>,
    #[arg(long)]
    onsite_only_fraction: Option<f64>,
    #[arg(long)]
    in_person_fraction: Option<f64>,
    #[arg(long)]
    multi_session_fraction: Option<f64>,
    #[arg(long)]
    override_fraction: Option<f64>,
    #[arg(long)]
    virtual_clinics: Option<bool>,
    #[arg(long)]
    inaccessible_fraction: Option<f64>,
    /// Budget as a multiple of planted chronic spend; `none` removes budgets.
    #[arg(long, value_parser = optional_f64)]
    budget_tightness: Option<OrNone>,
    #[arg(long)]
    horizon_days: Option<u32>,
    #[arg(long)]
    epoch: Option<i64>,
    #[arg(long)]
    doctors_per_clinic: Option<usize>,
    #[arg(long)]
    max_distance: Option<u32>,
    #[arg(long)]
    env_windows_per_clinic: Option<usize>,
    /// Required sessions per slot; `none` gives every patient one need.
    #[arg(long, value_parser = optional_f64)]
    contention: Option<OrNone>,
    #[arg(long)]
    relevant_fill: Option<f64>,
    /// Write to a file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<ParseMode, String> {
    s.parse()
}

fn check_mode(s: &str) -> Result<CheckMode, String> {
    s.parse()
}

fn weights(s: &str) -> Result<ObjectiveWeights, String> {
    let w: ObjectiveWeights = medsched_core::json::from_json_str(s).map_err(|e| e.to_string())?;
    if w.is_valid() {
        Ok(w)
    } else {
        Err("weights must be non-negative".into())
    }
}

fn urgency_weights(s: &str) -> Result<[u32; 3], String> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    parts
        .try_into()
        .map_err(|_| "expected three comma-separated weights".to_owned())
}

/// A number, or `none`.
#[derive(Clone, Copy)]
struct OrNone(Option<f64>);

fn optional_f64(s: &str) -> Result<OrNone, String> {
    if s == "none" {
        Ok(OrNone(None))
    } else {
        s.parse().map(|v| OrNone(Some(v))).map_err(|e| format!("{e}"))
    }
}

/// A failure that maps to an exit code.
struct Failure(u8, String);

impl Failure {
    fn invalid(msg: impl ToString) -> Self {
        Failure(EXIT_INVALID, msg.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(Failure::invalid)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
    }
}

fn load(args: &InputArgs) -> Result<Instance, Failure> {
    let text = read_text(&args.input)?;
    let format = args.format.unwrap_or_else(|| {
        if args.input.extension().is_some_and(|e| e == "json") {
            Format::Json
        } else {
            Format::Facts
        }
    });
    match format {
        Format::Json => parse_json(&text).map_err(Failure::invalid),
        Format::Facts => {
            let parsed = parse_facts(&text, args.parse).map_err(Failure::invalid)?;
            for w in &parsed.warnings {
                eprintln!("warning: {w}");
            }
            Ok(parsed.instance)
        }
    }
}

fn load_valid(args: &InputArgs) -> Result<Instance, Failure> {
    let inst = load(args)?;
    let report = validate_instance(&inst);
    for issue in report.warnings() {
        eprintln!("warning: {}: {}", issue.code, issue.fact);
    }
    if !report.is_valid() {
        let lines: Vec<String> = report.errors().map(|i| format!("{}: {}", i.code, i.fact)).collect();
        return Err(Failure::invalid(format!("invalid instance\n{}", lines.join("\n"))));
    }
    Ok(inst)
}

fn status_label(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::FeasibleTimeout => "feasible-timeout",
        SolveStatus::Infeasible => "infeasible",
    }
}

fn explain(out: &mut impl Write, schedule: &Schedule) -> io::Result<()> {
    writeln!(
        out,
        "% appointment: distance + wait + sensory - clinic - doctor - window = total"
    )?;
    for b in &schedule.breakdown {
        writeln!(
            out,
            "% {}: {} + {} + {} - {} - {} - {} = {}",
            b.appointment,
            b.distance_term,
            b.wait_term,
            b.sensory_term,
            b.clinic_bonus,
            b.doctor_bonus,
            b.window_bonus,
            b.total()
        )?;
    }
    Ok(())
}

fn result_json(r: &SolveResult) -> serde_json::Value {
    serde_json::to_value(r).expect("solve result serializes")
}

fn solve(args: SolveArgs) -> Result<u8, Failure> {
    let inst = load_valid(&args.input)?;
    if !(args.time_budget > 0.0 && args.time_budget.is_finite()) {
        return Err(Failure::invalid("time budget must be positive"));
    }
    let opts = SolveOptions {
        weights: args.search.weights.unwrap_or_default(),
        time_budget: Duration::from_secs_f64(args.time_budget),
        mode: args.search.mode,
    };
    let r = solve_exact(&inst, &opts).map_err(Failure::invalid)?;
    let greedy = if args.baseline {
        Some(solve_greedy_first_available(&inst, &opts).map_err(Failure::invalid)?)
    } else {
        None
    };
    let mut out = io::stdout().lock();
    let write = |e: io::Error| Failure(1, e.to_string());
    if args.search.json {
        let mut v = json!({ "result": result_json(&r) });
        if let Some(g) = &greedy {
            v["baseline"] = result_json(g);
        }
        writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap()).map_err(write)?;
    } else {
        writeln!(
            out,
            "% status: {}, objective: {}, nodes: {}, candidates: {}, time: {:.3}s",
            status_label(r.status),
            r.objective.map_or("-".into(), |o| o.to_string()),
            r.nodes_explored,
            r.candidates,
            r.elapsed.as_secs_f64()
        )
        .map_err(write)?;
        if let Some(g) = &greedy {
            writeln!(
                out,
                "% baseline: {}, objective: {}",
                status_label(g.status),
                g.objective.map_or("-".into(), |o| o.to_string())
            )
            .map_err(write)?;
        }
        if let Some(s) = &r.schedule {
            if args.explain {
                explain(&mut out, s).map_err(write)?;
            }
            write!(out, "{}", emit_schedule(&s.appointments)).map_err(write)?;
        }
    }
    Ok(if r.status == SolveStatus::Infeasible {
        EXIT_INFEASIBLE
    } else {
        0
    })
}

fn validate(args: ValidateArgs) -> Result<u8, Failure> {
    let inst = load(&args.input)?;
    let report = validate_instance(&inst);
    let mut v = json!({ "valid": report.is_valid(), "issues": report.issues });
    let mut code = if report.is_valid() { 0 } else { EXIT_INVALID };
    if let Some(path) = &args.schedule {
        let appts = parse_schedule(&read_text(path)?).map_err(Failure::invalid)?;
        let violations = check_all(&inst, &appts, args.mode).map_err(Failure::invalid)?;
        if code == 0 && !violations.is_empty() {
            code = EXIT_VIOLATIONS;
        }
        v["feasible"] = json!(violations.is_empty());
        v["violations"] = serde_json::to_value(violations).unwrap();
    }
    println!("{}", serde_json::to_string_pretty(&v).unwrap());
    Ok(code)
}

fn oracle(args: OracleArgs) -> Result<u8, Failure> {
    let inst = load_valid(&args.input)?;
    let w = args.search.weights.unwrap_or_default();
    let o = enumerate_optimal(&inst, &w, args.search.mode, args.cap).map_err(Failure::invalid)?;
    if args.search.json {
        println!("{}", serde_json::to_string_pretty(&o).unwrap());
    } else {
        println!(
            "% optimum: {}, optimal schedules: {}, feasible: {}, enumerated: {}",
            o.optimum.map_or("-".into(), |x| x.to_string()),
            o.optimal.len(),
            o.feasible_count,
            o.enumerated
        );
        for (i, s) in o.optimal.iter().enumerate() {
            println!("% schedule {}", i + 1);
            print!("{}", emit_schedule(s));
        }
    }
    Ok(if o.optimum.is_none() { EXIT_INFEASIBLE } else { 0 })
}

fn profile(args: &GenerateArgs) -> GenProfile {
    let mut p = match args.profile {
        Profile::Default => GenProfile::default(),
        Profile::Minimal => GenProfile::minimal(),
        Profile::Small => GenProfile::small(),
        Profile::Contention => GenProfile::contention(),
    };
    macro_rules! knob {
        ($($f:ident),*) => { $( if let Some(v) = args.$f { p.$f = v; } )* };
    }
    knob!(
        disabled_fraction,
        sensory_fraction,
        clinic_pref_fraction,
        doctor_pref_fraction,
        window_pref_fraction,
        visit_types,
        chronic_fraction,
        onsite_only_fraction,
        in_person_fraction,
        multi_session_fraction,
        override_fraction,
        virtual_clinics,
        inaccessible_fraction,
        horizon_days,
        epoch,
        doctors_per_clinic,
        max_distance,
        env_windows_per_clinic,
        relevant_fill
    );
    if let Some(OrNone(v)) = args.budget_tightness {
        p.budget_tightness = v;
    }
    if let Some(OrNone(v)) = args.contention {
        p.contention = v;
    }
    if let Some(w) = args.urgency_weights {
        p.urgency_weights = w;
    }
    p
}

fn generate_cmd(args: GenerateArgs) -> Result<u8, Failure> {
    let inst =
        generate(args.seed, args.patients, args.clinics, args.slots, &profile(&args)).map_err(Failure::invalid)?;
    let text = match args.format {
        Format::Facts => emit_facts(&inst),
        Format::Json => emit_json(&inst) + "\n",
    };
    match &args.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Validate(a) => validate(a),
        Command::Oracle(a) => oracle(a),
        Command::Generate(a) => generate_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
