use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use w4o::gateway::{serve_mock, MockScript, RequestKind, ScriptedReply};
use w4o::orchestrator::{
    format_report, run_benchmark, run_episode, BackendChoice, BenchmarkConfig, BenchmarkTask,
    EpisodeConfig, Mode, Tolerances,
};
use w4o::scene::{default_camera, observe, sample_layout, SceneState};

const EXIT_FAILURES: i32 = 1;
const EXIT_CONFIG: i32 = 2;

#[derive(Parser)]
#[command(name = "w4o", about = "Subgoal-image manipulation pipeline harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its JSON report.
    Run(RunArgs),
    /// Run a benchmark suite and print the success-rate table.
    Bench(BenchArgs),
    /// Lift a scene to a labeled point cloud and write ASCII PLY.
    ExportCloud(ExportCloudArgs),
    /// Serve scripted backend replies over the wire protocol.
    MockServer(MockServerArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Oracle,
    Mock,
    Remote,
}

impl From<BackendArg> for BackendChoice {
    fn from(arg: BackendArg) -> Self {
        match arg {
            BackendArg::Oracle => BackendChoice::Oracle,
            BackendArg::Mock => BackendChoice::Mock,
            BackendArg::Remote => BackendChoice::Remote,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "open_loop", alias = "open-loop")]
    OpenLoop,
    #[value(name = "closed_loop", alias = "closed-loop")]
    ClosedLoop,
}

impl From<ModeArg> for Mode {
    fn from(arg: ModeArg) -> Self {
        match arg {
            ModeArg::OpenLoop => Mode::OpenLoop,
            ModeArg::ClosedLoop => Mode::ClosedLoop,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Layout template name (pick-place, take-off-rack).
    #[arg(long)]
    scene_template: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Natural-language task, e.g. "Put the tomato in the pan".
    #[arg(long)]
    task: String,
    #[arg(long, value_enum, default_value = "oracle")]
    backend: BackendArg,
    /// Base URL for --backend remote (W4O_BACKEND_URL overrides).
    #[arg(long)]
    backend_url: Option<String>,
    #[arg(long, value_enum, default_value = "open_loop")]
    mode: ModeArg,
    #[arg(long, default_value_t = 3)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.05)]
    grasp_threshold: f64,
    #[arg(long, default_value_t = 0)]
    planner_seed: u64,
    #[arg(long, default_value_t = 1)]
    plan_candidates: usize,
    /// Success tolerance on position, meters.
    #[arg(long, default_value_t = 0.02)]
    tol_position: f64,
    /// Success tolerance on rotation, degrees.
    #[arg(long, default_value_t = 10.0)]
    tol_rotation_deg: f64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON array of {name, template, task} entries.
    #[arg(long)]
    suite: PathBuf,
    /// Layout seeds: "1..5" (inclusive), "3", or "1,4,9".
    #[arg(long, default_value = "1..5")]
    seeds: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, value_enum, default_value = "oracle")]
    backend: BackendArg,
    #[arg(long)]
    backend_url: Option<String>,
    #[arg(long, value_enum, default_value = "open_loop")]
    mode: ModeArg,
    #[arg(long, default_value_t = 3)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.05)]
    grasp_threshold: f64,
    #[arg(long, default_value_t = 1)]
    plan_candidates: usize,
    #[arg(long, default_value_t = 0.02)]
    tol_position: f64,
    #[arg(long, default_value_t = 10.0)]
    tol_rotation_deg: f64,
    /// Episode-level parallelism; defaults to the rayon global pool.
    #[arg(long)]
    workers: Option<usize>,
    /// JSON report destination; table always prints to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportCloudArgs {
    /// Scene state JSON. Omit to sample a fresh layout instead.
    #[arg(long, conflicts_with = "seed")]
    scene: Option<PathBuf>,
    /// Template whose camera views the scene (and whose layout is
    /// sampled when --scene is omitted).
    #[arg(long, default_value = "pick-place")]
    template: String,
    /// Layout seed, used only when --scene is omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MockServerArgs {
    /// JSON array of {kind, reply} entries, per kind in arrival order.
    #[arg(long)]
    script: PathBuf,
    #[arg(long, default_value_t = 8700)]
    port: u16,
}

/// script.json entry. `reply` is one of {"respond": <json>},
/// {"fail": <status>}, "drop", or {"stall_ms": <millis>}.
#[derive(Deserialize)]
struct ScriptEntry {
    kind: RequestKind,
    reply: ReplySpec,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum ReplySpec {
    Respond(serde_json::Value),
    Fail(u16),
    Drop,
    StallMs(u64),
}

impl From<ReplySpec> for ScriptedReply {
    fn from(spec: ReplySpec) -> Self {
        match spec {
            ReplySpec::Respond(v) => ScriptedReply::Respond(v),
            ReplySpec::Fail(status) => ScriptedReply::Fail(status),
            ReplySpec::Drop => ScriptedReply::Drop,
            ReplySpec::StallMs(ms) => ScriptedReply::Stall(Duration::from_millis(ms)),
        }
    }
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, String> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| format!("bad seed range '{spec}'"))?;
        let hi: u64 = hi.trim().parse().map_err(|_| format!("bad seed range '{spec}'"))?;
        if lo > hi {
            return Err(format!("empty seed range '{spec}'"));
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad seed '{s}'")))
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf, what: &str) -> Result<T, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {what} {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad {what} {}: {e}", path.display()))
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match path {
        Some(path) => fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<i32, String> {
    let mut config = EpisodeConfig::new(args.scene_template, args.seed, args.task);
    config.backend = args.backend.into();
    config.backend_url = args.backend_url;
    config.mode = args.mode.into();
    config.max_iters = args.max_iters;
    config.grasp_threshold = args.grasp_threshold;
    config.planner_seed = args.planner_seed;
    config.plan_candidates = args.plan_candidates;
    config.tolerances = Tolerances {
        position: args.tol_position,
        rotation_deg: args.tol_rotation_deg,
    };

    let report = run_episode(&config);
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    write_out(&args.out, &json)?;

    match (&report.failure, report.success) {
        (Some(reason), _) if reason.starts_with("config:") || reason.starts_with("layout:") => {
            Err(reason.clone())
        }
        (Some(reason), _) => {
            eprintln!("episode failed: {reason}");
            Ok(EXIT_FAILURES)
        }
        (None, true) => {
            eprintln!("episode succeeded");
            Ok(0)
        }
        (None, false) => {
            eprintln!("episode completed but missed the goal tolerances");
            Ok(EXIT_FAILURES)
        }
    }
}

fn cmd_bench(args: BenchArgs) -> Result<i32, String> {
    let suite: Vec<BenchmarkTask> = read_json(&args.suite, "suite")?;
    if suite.is_empty() {
        return Err("suite is empty".to_string());
    }
    let config = BenchmarkConfig {
        seeds: parse_seeds(&args.seeds)?,
        trials_per_seed: args.trials,
        backend: args.backend.into(),
        backend_url: args.backend_url,
        mode: args.mode.into(),
        max_iters: args.max_iters,
        grasp_threshold: args.grasp_threshold,
        plan_candidates: args.plan_candidates,
        tolerances: Tolerances {
            position: args.tol_position,
            rotation_deg: args.tol_rotation_deg,
        },
        workers: args.workers,
    };

    let report = run_benchmark(&suite, &config);
    print!("{}", format_report(&report));
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        fs::write(path, json).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }

    let all_succeeded = report
        .tasks
        .iter()
        .all(|task| task.successes == task.trials);
    Ok(if all_succeeded { 0 } else { EXIT_FAILURES })
}

fn cmd_export_cloud(args: ExportCloudArgs) -> Result<i32, String> {
    let scene: SceneState = match (&args.scene, args.seed) {
        (Some(path), None) => read_json(path, "scene")?,
        (None, Some(seed)) => {
            sample_layout(&args.template, seed).map_err(|e| e.to_string())?
        }
        (None, None) => return Err("need either --scene or --seed".to_string()),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let camera = default_camera(&args.template).map_err(|e| e.to_string())?;
    let obs = observe(&scene, &camera).map_err(|e| e.to_string())?;
    fs::write(&args.out, obs.cloud.to_ply_string())
        .map_err(|e| format!("cannot write {}: {e}", args.out.display()))?;
    eprintln!(
        "wrote {} points ({} objects) to {}",
        obs.cloud.len(),
        obs.labels.len(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_mock_server(args: MockServerArgs) -> Result<i32, String> {
    let entries: Vec<ScriptEntry> = read_json(&args.script, "script")?;
    let mut script = MockScript::new();
    for entry in entries {
        script = script.on(entry.kind, [entry.reply.into()]);
    }
    let server = serve_mock(script, args.port).map_err(|e| e.to_string())?;
    eprintln!("listening on {}", server.url());
    loop {
        std::thread::park();
    }
}

fn main() {
    let code = match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
        Command::ExportCloud(args) => cmd_export_cloud(args),
        Command::MockServer(args) => cmd_mock_server(args),
    };
    match code {
        Ok(code) => std::process::exit(code),
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(EXIT_CONFIG);
        }
    }
}
