//! `occlusim`: generate scenarios, run single episodes, run batches,
//! synthesize gains and print the resolved configuration.
//!
//! Exit codes: 0 success, 1 unsafe episode outcome, 2 configuration or
//! file error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use occlusim::control::lqr::{calibrate_dt, gain_report, GainMode, GainReport};
use occlusim::control::ControllerKind;
use occlusim::harness::{self, io, run_episode};
use occlusim::world::{generate_scenario, Family, ScenarioConfig};
use occlusim::RunConfig;

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "occlusim", version, about = "Occlusion-aware driving simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario family: sc1, sc2 or sc3.
    #[arg(long)]
    family: Option<String>,
    /// Simulation tick in seconds.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated scenario as JSON.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one episode.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "proposed")]
        controller: String,
        /// Scenario seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scenario JSON to run instead of generating one.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Episode record (JSON) output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// NDJSON trace output.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a seeded batch and write summaries.
    Batch {
        #[command(flatten)]
        common: Common,
        /// Controllers, comma separated (default: all four).
        #[arg(long, value_delimiter = ',')]
        controller: Vec<String>,
        /// Episodes per family.
        #[arg(long)]
        episodes: Option<usize>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize LQR gains and compare them with the shipped gains.
    Gains {
        /// cruise or yield.
        #[arg(long, default_value = "cruise")]
        mode: String,
        /// Time step; omitted, a sweep over 0.01..=0.5 s is reported.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Print the resolved configuration as TOML.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) => m,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path).map_err(config_err)?,
        None => RunConfig::default(),
    };
    if let Some(f) = &common.family {
        let family: Family = f.parse().map_err(config_err)?;
        cfg.scenario.family = family;
        cfg.batch.families = vec![family];
    }
    if let Some(dt) = common.dt {
        cfg.scenario.tick = dt;
    }
    Ok(cfg)
}

fn parse_controller(s: &str) -> Result<ControllerKind, Failure> {
    s.parse().map_err(config_err)
}

fn write_files(files: &[(PathBuf, String)]) -> Result<(), Failure> {
    io::write_all_atomic(files).map_err(config_err)
}

fn ensure_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(Failure::Config(format!("directory {} does not exist", p.display())))
        }
        _ => Ok(()),
    }
}

fn cmd_generate(common: &Common, seed: u64, out: &Path) -> Result<u8, Failure> {
    let cfg = resolve(common)?;
    cfg.validate().map_err(config_err)?;
    ensure_parent(out)?;
    let world = generate_scenario(&ScenarioConfig {
        seed,
        ..cfg.scenario.clone()
    })
    .map_err(config_err)?;
    write_files(&[(out.to_path_buf(), io::scenario_json_string(&world).map_err(config_err)?)])?;
    say!(
        "wrote {} ({} family, seed {seed}, {} parked cars, {} pedestrians)",
        out.display(),
        world.family,
        world.parked_cars.len(),
        world.pedestrians.len()
    );
    Ok(0)
}

fn cmd_run(
    common: &Common,
    controller: &str,
    seed: u64,
    scenario: Option<&Path>,
    out: Option<&Path>,
    trace: Option<&Path>,
) -> Result<u8, Failure> {
    let mut cfg = resolve(common)?;
    let kind = parse_controller(controller)?;
    cfg.validate().map_err(config_err)?;
    for p in out.iter().chain(trace.iter()) {
        ensure_parent(p)?;
    }
    let world = match scenario {
        Some(path) => {
            let w = io::read_scenario(path).map_err(config_err)?;
            w.validate().map_err(config_err)?;
            w
        }
        None => generate_scenario(&ScenarioConfig {
            seed,
            ..cfg.scenario.clone()
        })
        .map_err(config_err)?,
    };
    cfg.episode.record_trace = trace.is_some();
    let record = run_episode(&world, kind, &cfg.controller, &cfg.sensor, &cfg.episode, cfg.dt());

    let mut files = Vec::new();
    if let Some(p) = out {
        files.push((p.to_path_buf(), io::episode_json_string(&record).map_err(config_err)?));
    }
    if let Some(p) = trace {
        files.push((p.to_path_buf(), io::trace_ndjson_string(&record).map_err(config_err)?));
    }
    write_files(&files)?;

    say!(
        "{} {} seed {}: {} after {:.1} s, yields {}/{}, emergency {:.1} s",
        kind,
        record.family,
        record.seed,
        record.outcome.label(),
        record.duration,
        record.successful_yields,
        record.unsuccessful_yields,
        record.emergency_time
    );
    if let harness::Outcome::Fault { diagnostic } = &record.outcome {
        eprintln!("fault: {diagnostic}");
    }
    Ok(if record.success() { 0 } else { 1 })
}

fn run_batch(cfg: &RunConfig) -> Result<harness::BatchResult, Failure> {
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.batch.workers {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(config_err)?;
        pool.install(|| harness::run_batch(cfg)).map_err(config_err)
    }
    #[cfg(not(feature = "parallel"))]
    {
        harness::run_batch_sequential(cfg).map_err(config_err)
    }
}

fn cmd_batch(
    common: &Common,
    controllers: &[String],
    episodes: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: &Path,
) -> Result<u8, Failure> {
    let mut cfg = resolve(common)?;
    if !controllers.is_empty() {
        cfg.batch.controllers = controllers.iter().map(|c| parse_controller(c)).collect::<Result<_, _>>()?;
    }
    if let Some(n) = episodes {
        cfg.batch.episodes = n;
    }
    if let Some(s) = seed {
        cfg.batch.master_seed = s;
    }
    if workers.is_some() {
        cfg.batch.workers = workers;
    }
    cfg.validate().map_err(config_err)?;
    if out.exists() && !out.is_dir() {
        return Err(Failure::Config(format!("{} exists and is not a directory", out.display())));
    }
    ensure_parent(out)?;
    let config_text = cfg.to_toml_string().map_err(config_err)?;

    let result = run_batch(&cfg)?;

    std::fs::create_dir_all(out).map_err(|e| Failure::Config(format!("cannot create {}: {e}", out.display())))?;
    write_files(&[
        (out.join("summary.csv"), io::summary_csv_string(&result.summaries).map_err(config_err)?),
        (out.join("summary.json"), io::summary_json_string(&result.summaries).map_err(config_err)?),
        (out.join("episodes.csv"), io::episode_index_csv_string(&result.records).map_err(config_err)?),
        (out.join("config.toml"), config_text),
    ])?;
    for s in &result.summaries {
        say!(
            "{:<8} {}  mt1 {:>4}/{:<4} mt2 {:>7.3} ({:.3})  mt3 {:>4}/{:<4} mt4 {:>6.3} ({:.3})",
            s.controller.name(),
            s.family,
            s.mt1_succ,
            s.mt1_unsucc,
            s.mt2_mean,
            s.mt2_std,
            s.mt3,
            s.episodes,
            s.mt4_mean,
            s.mt4_std
        );
    }
    say!("wrote {}", out.display());
    Ok(0)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn print_report(r: &GainReport) {
    say!(
        "dt {:.3}  K {}  reference {}  max deviation {:.4}  closed-loop |eig| {}  ({} iterations)",
        r.dt,
        fmt_vec(&r.gain),
        fmt_vec(&r.reference_gain),
        r.deviation,
        fmt_vec(&r.closed_loop_moduli),
        r.iterations
    );
}

fn cmd_gains(mode: &str, dt: Option<f64>) -> Result<u8, Failure> {
    let mode: GainMode = mode.parse().map_err(Failure::Config)?;
    let gains = occlusim::control::GainSet::default();
    match dt {
        Some(dt) => {
            if dt.is_nan() || dt <= 0.0 {
                return Err(Failure::Config(format!("dt must be positive, got {dt}")));
            }
            let r = gain_report(mode, dt, gains.j_yield, gains.j_cruise).map_err(|e| Failure::Numeric(e.to_string()))?;
            print_report(&r);
        }
        None => {
            let grid: Vec<f64> = (1..=50).map(|i| i as f64 * 0.01).collect();
            let reports = calibrate_dt(mode, &grid, gains.j_yield, gains.j_cruise).map_err(|e| Failure::Numeric(e.to_string()))?;
            let mut by_dt = reports.clone();
            by_dt.sort_by(|a, b| a.dt.total_cmp(&b.dt));
            for r in &by_dt {
                print_report(r);
            }
            say!("best match:");
            print_report(&reports[0]);
        }
    }
    Ok(0)
}

fn cmd_config(common: &Common) -> Result<u8, Failure> {
    let cfg = resolve(common)?;
    cfg.validate().map_err(config_err)?;
    let text = cfg.to_toml_string().map_err(config_err)?;
    say!("{}", text.trim_end());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Generate { common, seed, out } => cmd_generate(common, *seed, out),
        Command::Run {
            common,
            controller,
            seed,
            scenario,
            out,
            trace,
        } => cmd_run(common, controller, *seed, scenario.as_deref(), out.as_deref(), trace.as_deref()),
        Command::Batch {
            common,
            controller,
            episodes,
            seed,
            workers,
            out,
        } => cmd_batch(common, controller, *episodes, *seed, *workers, out),
        Command::Gains { mode, dt } => cmd_gains(mode, *dt),
        Command::Config { common } => cmd_config(common),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
