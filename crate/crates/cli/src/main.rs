//! `twave`: run, verify and plot damped nonlinear wave simulations on the torus.
//!
//! Exit status: 0 success, 1 internal error, 2 invalid configuration or
//! arguments, 3 numerical blow-up detected.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use torus_wave::checkpoint::{read_checkpoint, write_checkpoint};
use torus_wave::config::{parse_config_with, ConfigOverrides, InitialData, RunConfig};
use torus_wave::experiments::{
    blowup_probe, continuous_dependence, convergence_study, projection_study, ExperimentReport,
};
use torus_wave::integrator::{integrate_with, Trajectory};
use torus_wave::output::{plot_svg, write_csv, write_energy_csv, AxisScale, Manifest, Table};
use torus_wave::regime::{classify, parse_rational, rational_range, sweep};
use torus_wave::Error;

#[derive(Parser, Debug)]
#[command(name = "twave", version, about = "Pseudospectral solver for damped nonlinear waves on the torus")]
struct Cli {
    /// TOML run configuration.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides run.output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print a JSON summary on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Run exponents outside the covered well-posedness regions.
    #[arg(long, global = true)]
    allow_uncovered: bool,
    /// Worker threads for parallel studies (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the configured run and write energy.csv, checkpoint.twv and manifest.json.
    Simulate,
    /// Continue a run from a checkpoint to the configured horizon.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Galerkin convergence study over a list of cutoffs.
    Converge {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        cutoffs: Vec<usize>,
    },
    /// Continuous dependence on initial data.
    Cdep {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
        deltas: Vec<f64>,
    },
    /// Classify exponents against the well-posedness regions.
    Regime(RegimeArgs),
    /// Projection convergence for a built-in profile.
    ProjectTest {
        #[arg(long, default_value = "abs_sin_cubed")]
        profile: String,
        #[arg(long, default_value_t = 4.0)]
        s: f64,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64,128")]
        cutoffs: Vec<usize>,
        #[arg(long, default_value_t = 4096)]
        points: usize,
    },
    /// Blow-up time estimate under time-step refinement.
    Blowup {
        #[arg(long, value_delimiter = ',', default_value = "1e-3,5e-4,2.5e-4")]
        dts: Vec<f64>,
    },
    /// SVG line plot of CSV columns.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "t")]
        x: String,
        #[arg(long, value_delimiter = ',', default_value = "modified_E")]
        y: Vec<String>,
        #[arg(long)]
        logx: bool,
        #[arg(long)]
        logy: bool,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RegimeArgs {
    /// Damping exponent (integer, decimal or fraction a/b).
    #[arg(long, requires = "p")]
    m: Option<String>,
    #[arg(long, requires = "m")]
    p: Option<String>,
    /// Classify the grid lo:hi:step x lo:hi:step (exact arithmetic).
    #[arg(long, conflicts_with_all = ["m", "p"])]
    sweep: Option<String>,
}

/// Errors carrying their exit status.
enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::NonFinite(_) | Error::HermitianViolation { .. } => Failure::Internal(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

const EXIT_BLOWUP: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig<f64>, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage("this command needs --config FILE".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config_with(&text, ConfigOverrides { allow_uncovered: cli.allow_uncovered })?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn emit(cli: &Cli, summary: &Value, text: &str) {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(summary).expect("serializable summary"));
    } else {
        print!("{text}");
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(cli)?;
            simulate(cli, &cfg, "simulate")
        }
        Command::Resume { checkpoint } => {
            let mut cfg = load_config(cli)?;
            let state = read_checkpoint::<f64>(checkpoint)?;
            if state.t.partial_cmp(&cfg.horizon) != Some(std::cmp::Ordering::Less) {
                return Err(Failure::Usage(format!(
                    "checkpoint time {} is not before the horizon {}",
                    state.t, cfg.horizon
                )));
            }
            cfg.initial = InitialData::FromCheckpoint(checkpoint.clone());
            simulate(cli, &cfg, "resume")
        }
        Command::Converge { cutoffs } => {
            let cfg = load_config(cli)?;
            let report = convergence_study(&cfg, cutoffs)?.report().with_digest(cfg.digest());
            write_report(cli, &cfg, "converge", report)
        }
        Command::Cdep { deltas } => {
            let cfg = load_config(cli)?;
            let report = continuous_dependence(&cfg, deltas, cli.allow_uncovered)?.report().with_digest(cfg.digest());
            write_report(cli, &cfg, "cdep", report)
        }
        Command::Blowup { dts } => {
            let cfg = load_config(cli)?;
            let report = blowup_probe(&cfg, dts)?.report().with_digest(cfg.digest());
            write_report(cli, &cfg, "blowup", report)
        }
        Command::Regime(args) => regime(cli, args),
        Command::ProjectTest { profile, s, cutoffs, points } => {
            let report = projection_study(profile, *s, cutoffs, *points)?.report();
            let dir = out_dir(cli);
            let files = write_table(&dir, &report)?;
            let text = format!("{}pass: {}\n", table_text(&report), report.pass);
            emit(cli, &json!({ "report": report, "files": files }), &text);
            Ok(0)
        }
        Command::Plot { csv, x, y, logx, logy, output } => {
            let text = fs::read_to_string(csv).map_err(|e| Failure::Usage(format!("{}: {e}", csv.display())))?;
            let table = Table::parse(&text)?;
            let ys: Vec<&str> = y.iter().map(String::as_str).collect();
            let scale = |log: bool| if log { AxisScale::Log } else { AxisScale::Linear };
            let svg = plot_svg(&table, x, &ys, scale(*logx), scale(*logy))?;
            torus_wave::checkpoint::write_atomic(output, svg.as_bytes())?;
            emit(cli, &json!({ "output": output }), &format!("wrote {}\n", output.display()));
            Ok(0)
        }
    }
}

fn simulate(cli: &Cli, cfg: &RunConfig<f64>, command: &str) -> Result<u8, Failure> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let ckpt = dir.join("checkpoint.twv");
    let every = cfg.checkpoint_every as u64;
    let traj: Trajectory<f64> = integrate_with(cfg.initial_state()?, &cfg.plan(), |integ| {
        if every > 0 && integ.steps() % every == 0 {
            write_checkpoint(&ckpt, integ.state())?;
        }
        Ok(())
    })?;
    let last = traj.final_state().expect("trajectory has its initial state");
    write_checkpoint(&ckpt, last)?;
    write_energy_csv(&dir.join("energy.csv"), &traj.energy)?;
    let files = vec!["energy.csv".to_owned(), "checkpoint.twv".to_owned(), "manifest.json".to_owned()];
    Manifest::new(command, &cfg.source_text, files.clone()).write(&dir.join("manifest.json"))?;
    let final_energy = traj.energy.last().expect("initial sample");
    let summary = json!({
        "status": if traj.blowup.is_some() { "blowup" } else { "ok" },
        "final_t": last.t,
        "steps": traj.energy.len() - 1,
        "final_energy": final_energy,
        "blowup": traj.blowup,
        "regime": cfg.regime,
        "config_sha256": cfg.digest(),
        "output_dir": dir,
        "files": files,
    });
    let mut text = format!(
        "t = {}  E = {:.6e}  modified E = {:.6e}  identity residual = {:.3e}\n",
        last.t, final_energy.total_e, final_energy.modified_e, final_energy.identity_residual
    );
    if let Some(b) = traj.blowup {
        text.push_str(&format!("blow-up at t = {} (step {}, {:?})\n", b.t, b.step, b.reason));
    }
    text.push_str(&format!("wrote {}\n", dir.display()));
    emit(cli, &summary, &text);
    Ok(if traj.blowup.is_some() { EXIT_BLOWUP } else { 0 })
}

fn write_table(dir: &Path, report: &ExperimentReport) -> Result<Vec<String>, Failure> {
    write_csv(&dir.join("table.csv"), &report.header, &report.rows)?;
    let text = serde_json::to_string_pretty(report).map_err(|e| Failure::Internal(e.to_string()))?;
    torus_wave::checkpoint::write_atomic(&dir.join("report.json"), text.as_bytes())?;
    Ok(vec!["table.csv".into(), "report.json".into()])
}

fn table_text(report: &ExperimentReport) -> String {
    let mut text = report.header.join("\t");
    text.push('\n');
    for row in &report.rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.6e}")).collect();
        text.push_str(&cells.join("\t"));
        text.push('\n');
    }
    text
}

fn write_report(cli: &Cli, cfg: &RunConfig<f64>, command: &str, report: ExperimentReport) -> Result<u8, Failure> {
    let dir = cfg.output_dir.clone();
    let mut files = write_table(&dir, &report)?;
    files.push("manifest.json".into());
    Manifest::new(command, &cfg.source_text, files.clone()).write(&dir.join("manifest.json"))?;
    let text = format!("{}pass: {}\n", table_text(&report), report.pass);
    emit(cli, &json!({ "report": report, "files": files, "output_dir": dir }), &text);
    Ok(0)
}

fn regime(cli: &Cli, args: &RegimeArgs) -> Result<u8, Failure> {
    if let Some(spec) = &args.sweep {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(Failure::Usage(format!("--sweep expects lo:hi:step, got {spec:?}")));
        };
        let (lo, hi, step) = (parse_rational(lo)?, parse_rational(hi)?, parse_rational(step)?);
        if step <= torus_wave::regime::Rational::from_integer(0) {
            return Err(Failure::Usage("--sweep step must be positive".into()));
        }
        let rows = sweep(&rational_range(lo, hi, step));
        let mut text = String::from("m\tp\texistence\tuniqueness\tblowup_candidate\n");
        let mut records = Vec::new();
        for (m, p, v) in &rows {
            text.push_str(&format!("{m}\t{p}\t{:?}\t{:?}\t{}\n", v.existence, v.uniqueness, v.blowup_candidate));
            records.push(json!({ "m": m.to_string(), "p": p.to_string(), "verdict": v }));
        }
        emit(cli, &json!({ "rows": records }), &text);
        return Ok(0);
    }
    let (Some(m), Some(p)) = (&args.m, &args.p) else {
        return Err(Failure::Usage("regime needs --m and --p, or --sweep lo:hi:step".into()));
    };
    let verdict = classify(parse_rational(m)?, parse_rational(p)?)?;
    emit(cli, &json!({ "m": m, "p": p, "verdict": verdict }), &verdict.to_string());
    Ok(0)
}
