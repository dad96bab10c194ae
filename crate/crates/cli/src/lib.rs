//! Command-line front end: capacity curves, breakpoint tables, simulations,
//! sweeps and a verbose single-trial attack demo.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use advchan::capacity::{
    achievable_flip, capacity_erasure, capacity_erasure_feedback, p0_residual, p0_solve,
    upper_bound_flip_closed, upper_bound_flip_numeric,
};
use advchan::channel::{render, render_bits};
use advchan::rng::TrialSeed;
use advchan::sim::{sweep, write_csv, Experiment, ResultRow, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub const THREADS_ENV: &str = "ADVCHAN_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
            CliError::Other(_) => 5,
        }
    }
}

impl From<advchan::Error> for CliError {
    fn from(e: advchan::Error) -> Self {
        use advchan::Error::*;
        match e {
            Domain { .. } | Bracket { .. } | NonConvergence { .. } => {
                CliError::Domain(e.to_string())
            }
            Config(_) | OutOfRange { .. } => CliError::Parse(e.to_string()),
            EncoderExhausted { .. } | EmptyConsistentSet => CliError::Other(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "advchan",
    version,
    about = "Binary channels with random noise and an online adversary"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity and bound curves as CSV (model,q,p,value,note).
    Capacity(CapacityArgs),
    /// Breakpoint of the bit-flip upper bound as CSV (q,p0,residual,note).
    P0(P0Args),
    /// Monte Carlo error estimate for one scenario file.
    Simulate(SimulateArgs),
    /// Error estimates over a grid of scenario deltas.
    Sweep(SweepArgs),
    /// One trial of a scenario with a step-by-step log.
    AttackDemo(DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Erasures, no transmitter feedback.
    ErasureNoFb,
    /// Erasures with transmitter feedback.
    ErasureFb,
    /// Bit-flip upper bound.
    FlipUpper,
    /// Bit-flip achievable rate.
    FlipLower,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::ErasureNoFb => "erasure-no-fb",
            Model::ErasureFb => "erasure-fb",
            Model::FlipUpper => "flip-upper",
            Model::FlipLower => "flip-lower",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    #[arg(long = "model", value_enum, required = true)]
    pub models: Vec<Model>,
    #[arg(long = "q", required = true, allow_negative_numbers = true)]
    pub q_values: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub p_start: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_stop: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_step: f64,
    /// Optimizer tolerance for `--numeric`.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Evaluate flip-upper by direct minimisation instead of the closed form.
    #[arg(long)]
    pub numeric: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct P0Args {
    #[arg(long = "q", required = true, allow_negative_numbers = true)]
    pub q_values: Vec<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// JSON array of merge patches applied to the scenario, one per point.
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trial index under `--seed`.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Sizes the global rayon pool from `ADVCHAN_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Parse(format!("{THREADS_ENV}={raw:?} is not a positive integer"))
    })?;
    // a pool may already exist when embedded; that is not an error
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Capacity(a) => emit(a.out.as_deref(), &capacity_csv(&a)?),
        Command::P0(a) => emit(a.out.as_deref(), &p0_csv(&a)?),
        Command::Simulate(a) => emit(a.out.as_deref(), &simulate_csv(&a)?),
        Command::Sweep(a) => emit(a.out.as_deref(), &sweep_csv(&a)?),
        Command::AttackDemo(a) => emit(a.out.as_deref(), attack_demo(&a)?.as_bytes()),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| io_err(path, e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// Grid `start, start + step, ..., <= stop`, each point rounded to 12
/// decimals so that e.g. `0.1 + 0.2` prints as `0.3`.
pub fn p_grid(start: f64, stop: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Parse(format!(
            "bad grid: start {start}, stop {stop}, step {step}"
        )));
    }
    if stop < start {
        return Err(CliError::Parse(format!(
            "p-stop {stop} is below p-start {start}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn csv_bytes<const N: usize>(header: [&str; N], rows: Vec<[String; N]>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Other(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Other(format!("csv: {e}")))
}

fn evaluate(model: Model, p: f64, q: f64, numeric: bool, tol: f64) -> advchan::Result<f64> {
    Ok(match model {
        Model::ErasureNoFb => capacity_erasure(p, q)?.value(),
        Model::ErasureFb => capacity_erasure_feedback(p, q)?.value(),
        Model::FlipUpper if numeric => upper_bound_flip_numeric(p, q, tol)?.value,
        Model::FlipUpper => upper_bound_flip_closed(p, q)?.value(),
        Model::FlipLower => achievable_flip(p, q)?.value(),
    })
}

/// Capacity rows in model, q, p order. Domain errors become an empty value
/// with the message in `note`.
pub fn capacity_csv(a: &CapacityArgs) -> CliResult<Vec<u8>> {
    if !(a.tol > 0.0) {
        return Err(CliError::Parse(format!(
            "tol must be positive, got {}",
            a.tol
        )));
    }
    let grid = p_grid(a.p_start, a.p_stop, a.p_step)?;
    let mut rows = Vec::new();
    for &model in &a.models {
        for &q in &a.q_values {
            for &p in &grid {
                let (value, note) = match evaluate(model, p, q, a.numeric, a.tol) {
                    Ok(v) => (v.to_string(), String::new()),
                    Err(e) => (String::new(), e.to_string()),
                };
                rows.push([
                    model.name().to_string(),
                    q.to_string(),
                    p.to_string(),
                    value,
                    note,
                ]);
            }
        }
    }
    csv_bytes(["model", "q", "p", "value", "note"], rows)
}

/// Breakpoint rows; solver failures leave `p0` and `residual` empty.
pub fn p0_csv(a: &P0Args) -> CliResult<Vec<u8>> {
    if !(a.tol > 0.0) {
        return Err(CliError::Parse(format!(
            "tol must be positive, got {}",
            a.tol
        )));
    }
    let rows = a
        .q_values
        .iter()
        .map(|&q| match p0_solve(q, a.tol) {
            Ok(p0) => [
                q.to_string(),
                p0.to_string(),
                p0_residual(p0, q).to_string(),
                String::new(),
            ],
            Err(e) => [q.to_string(), String::new(), String::new(), e.to_string()],
        })
        .collect();
    csv_bytes(["q", "p0", "residual", "note"], rows)
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Scenario::from_json(&text).map_err(|e| match CliError::from(e) {
        CliError::Domain(m) => CliError::Domain(format!("{}: {m}", path.display())),
        other => CliError::Parse(format!("{}: {other}", path.display())),
    })
}

fn result_csv(rows: &[ResultRow]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(buf)
}

pub fn simulate_csv(a: &SimulateArgs) -> CliResult<Vec<u8>> {
    let scenario = load_scenario(&a.scenario)?;
    let estimate = Experiment::prepare(&scenario)?.estimate(a.trials, a.seed)?;
    result_csv(&[ResultRow::new(0, Some(&scenario), Ok(&estimate))])
}

pub fn sweep_csv(a: &SweepArgs) -> CliResult<Vec<u8>> {
    let scenario = load_scenario(&a.scenario)?;
    let text = fs::read_to_string(&a.grid).map_err(|e| io_err(&a.grid, e))?;
    let grid: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| {
        CliError::Parse(format!(
            "{}: line {}, column {}: {e}",
            a.grid.display(),
            e.line(),
            e.column()
        ))
    })?;
    if a.trials == 0 {
        return Err(CliError::Parse("need at least one trial".into()));
    }
    let rows = sweep(&scenario, &grid, a.trials, a.seed)?;
    result_csv(&rows.iter().map(ResultRow::from_sweep).collect::<Vec<_>>())
}

/// Runs one trial and narrates it.
pub fn attack_demo(a: &DemoArgs) -> CliResult<String> {
    let scenario = load_scenario(&a.scenario)?;
    let exp = Experiment::prepare(&scenario)?;
    let out = exp.run_trial(TrialSeed::new(a.seed, a.trial))?;
    let t = &out.transcript;
    let mut log = String::new();
    let w = &mut log;
    let _ = writeln!(
        w,
        "scenario: {}",
        if scenario.label.is_empty() {
            "(unlabelled)"
        } else {
            &scenario.label
        }
    );
    let _ = writeln!(
        w,
        "channel: {:?} q={}  p={}  budget={}  code={}  adversary={}",
        scenario.channel.kind,
        scenario.channel.q,
        scenario.p,
        t.budget,
        scenario.code_label(),
        scenario.adversary_label()
    );
    if let Some(code) = exp.code() {
        let _ = writeln!(
            w,
            "rate R={:.4}  chunk ends {:?}",
            advchan::codes::Codebook::rate(code),
            code.chunk_ends()
        );
    }
    let _ = writeln!(w, "sent message {}", out.sent);

    let ell = out.attack.as_ref().map(|r| r.plan.ell);
    if let Some(ell) = ell {
        let _ = writeln!(w, "phase 1: steps 1..={ell}");
    }
    for k in 0..t.y.len() {
        if Some(k) == ell {
            let r = out.attack.as_ref().expect("attack");
            let _ = writeln!(
                w,
                "switch: y1 = {}  candidates={}  u'={}  remaining budget={}",
                render(&t.y[..k]),
                r.candidates,
                r.plan.u_prime.map_or("-".into(), |u| u.to_string()),
                r.budget_at_switch
            );
            if let Some(xp) = &r.plan.x_prime {
                let _ = writeln!(w, "        x' = {}", render_bits(xp));
            }
            let _ = writeln!(w, "phase 2: steps {}..={}", k + 1, t.y.len());
        }
        let _ = writeln!(
            w,
            "  k={:>4}  x={}  a={}  y={}",
            k + 1,
            t.x[k] as u8,
            t.a[k] as u8,
            t.y[k].as_char()
        );
    }
    let _ = writeln!(w, "x = {}", render_bits(&t.x));
    let _ = writeln!(w, "y = {}", render(&t.y));
    if let Some(r) = &out.attack {
        let _ = writeln!(
            w,
            "push: disagreements={}  actions={}  babble actions={}  exhausted={}",
            r.push_disagreements, r.push_actions, r.babble_actions, r.exhausted
        );
    }
    let _ = writeln!(
        w,
        "actions used {} of {}  (refused requests {})",
        t.actions_used, t.budget, t.violation_attempts
    );
    let _ = writeln!(
        w,
        "decoder: verdict={:?}  decoded={}  t*={}  list={}",
        out.verdict,
        out.decoded.map_or("-".into(), |u| u.to_string()),
        out.t_star.map_or("-".into(), |t| t.to_string()),
        out.list_size.map_or("-".into(), |l| l.to_string())
    );
    let _ = writeln!(
        w,
        "confusion={}  ambiguous output={}",
        out.confusion, out.ambiguous_output
    );
    if let Some(v) = &out.invariant_violation {
        let _ = writeln!(w, "INVARIANT VIOLATION: {v}");
    }
    Ok(log)
}
