use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;
use medsched_core::constraints::CheckMode;
use medsched_core::domain::Instance;
use medsched_core::facts::{parse_facts, ParseMode};
use medsched_core::json::parse_json;
use medsched_service::http::{router, run_tick, unix_now, AppState};
use medsched_service::{Config, Scheduler};

/// Batch-window appointment booking service.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, env = "MEDSCHED_PORT", default_value_t = 8080)]
    port: u16,
    /// Seconds between automatic ticks; 0 disables them (use POST /admin/tick).
    #[arg(long, env = "MEDSCHED_WINDOW", default_value_t = 60)]
    window: u64,
    /// Clinic catalog: a fact file, or JSON when the name ends in `.json`.
    #[arg(long, env = "MEDSCHED_BASE")]
    base: PathBuf,
    #[arg(long, env = "MEDSCHED_TOKEN")]
    token: String,
    #[arg(long, env = "MEDSCHED_JOURNAL")]
    journal: Option<PathBuf>,
    /// Solver time budget per batch, in seconds.
    #[arg(long, default_value_t = 5.0)]
    time_budget: f64,
    #[arg(long, default_value = "faithful")]
    mode: CheckMode,
}

fn load_base(path: &PathBuf) -> Result<Instance, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_json(&text).map_err(|e| e.to_string())
    } else {
        parse_facts(&text, ParseMode::Lenient)
            .map(|p| p.instance)
            .map_err(|e| e.to_string())
    }
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt::init();
    let args = Args::parse();
    let base = load_base(&args.base).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        std::process::exit(3);
    });
    if !(args.time_budget.is_finite() && args.time_budget > 0.0) {
        eprintln!("error: --time-budget must be positive");
        std::process::exit(3);
    }
    let cfg = Config {
        time_budget: Duration::from_secs_f64(args.time_budget),
        mode: args.mode,
        ..Config::default()
    };
    let scheduler = match &args.journal {
        Some(path) => Scheduler::open(base, cfg, path),
        None => Scheduler::new(base, cfg),
    }
    .unwrap_or_else(|e| {
        eprintln!("error: {e}");
        std::process::exit(3);
    });
    let state = AppState::new(scheduler, args.token);

    if args.window > 0 {
        let ticker = state.clone();
        let window = Duration::from_secs(args.window);
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(window);
            interval.tick().await;
            loop {
                interval.tick().await;
                match run_tick(&ticker, unix_now()).await {
                    Ok(r) if r.batch_size > 0 => tracing::info!(
                        batch = r.batch_size,
                        scheduled = r.scheduled.len(),
                        rejected = r.rejected.len(),
                        "tick"
                    ),
                    Ok(_) => {}
                    Err(e) => tracing::error!("tick failed: {e}"),
                }
            }
        });
    }

    let listener = tokio::net::TcpListener::bind(("0.0.0.0", args.port))
        .await
        .unwrap_or_else(|e| {
            eprintln!("error: bind port {}: {e}", args.port);
            std::process::exit(1);
        });
    tracing::info!("listening on {}", args.port);
    axum::serve(listener, router(state)).await.expect("server error");
}
