//! Subcommand runners behind the `dkm` binary.
//!
//! Each runner writes its tables into the output directory, followed by a
//! `manifest.json` that records the exact command, resolved parameters and
//! the list of files produced. `dkm replay <manifest>` re-runs it.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use delay_kuramoto::analysis::{
    biased_ic, classify_direction, contributions_over, mean_order_parameter, order_parameter,
    order_parameter_trace, random_ic, DirectionRecord, DirectionStats, DIRECTION_THRESHOLD,
};
use delay_kuramoto::batch::map_cells;
use delay_kuramoto::dynamics::{
    complex_trajectory, integrate_dkm, integrate_km, integrate_phase_lag, ComplexState,
    Frequencies, HistoryPolicy, PhaseTrajectory, SimConfig, DEFAULT_DT, DEFAULT_SIGMA,
};
use delay_kuramoto::export;
use delay_kuramoto::netgen::{
    build_ring, delays_from_distances, load_network, ring_default_speed, synth_geometric_with,
    DelayMatrix, DelaySpan, Network, GEOMETRIC_DECAY,
};
use delay_kuramoto::spectral::{build_delay_operator, leading_modes, predicted_pattern, Spectrum};

/// Conduction speed for generated geometric networks, in unit-ball radii per
/// second: 5 m/s with the ball's diameter standing for 15 cm of tissue.
pub const GEOMETRIC_SPEED: f64 = 5.0 / 0.075;

#[derive(Debug, Parser)]
#[command(name = "dkm", version, about = "Delayed Kuramoto network experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Time-averaged order parameter over a grid of coupling strengths and seeds.
    Sweep(SweepArgs),
    /// One simulation with trajectory and order-parameter exports.
    Simulate(SimulateArgs),
    /// Spectrum of the delay operator, leading modes and predicted patterns.
    Predict(PredictArgs),
    /// Direction statistics over a batch of delayed runs.
    Direction(DirectionArgs),
    /// Re-run the command stored in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sweep(_) => "sweep",
            Command::Simulate(_) => "simulate",
            Command::Predict(_) => "predict",
            Command::Direction(_) => "direction",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Km,
    Dkm,
    Phaselag,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcMode {
    Random,
    Biased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum History {
    Constant,
    Backcast,
}

impl From<History> for HistoryPolicy {
    fn from(h: History) -> Self {
        match h {
            History::Constant => HistoryPolicy::ConstantInitial,
            History::Backcast => HistoryPolicy::LinearBackcast,
        }
    }
}

/// Network and delay parameters.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct NetArgs {
    /// Node count (ring or geometric).
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Ring neighbours on each side.
    #[arg(long, default_value_t = 25)]
    pub k: usize,
    /// Load the network from a file instead of building a ring.
    #[arg(long, conflicts_with = "geometric")]
    pub network: Option<PathBuf>,
    /// Random geometric network in the unit ball with this density.
    #[arg(long)]
    pub geometric: Option<f64>,
    /// Length scale of the geometric weight decay.
    #[arg(long, default_value_t = GEOMETRIC_DECAY)]
    pub decay: f64,
    /// Seed of the geometric network.
    #[arg(long, default_value_t = 0)]
    pub net_seed: u64,
    /// Conduction speed in length units per second.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Natural frequency in Hz.
    #[arg(long, default_value_t = 10.0)]
    pub omega_hz: f64,
}

/// Integration parameters.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TimeArgs {
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    /// Renormalization interval of the complex flow.
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    /// Pre-history of the delayed model.
    #[arg(long, value_enum, default_value_t = History::Constant)]
    pub history: History,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    #[command(flatten)]
    pub io: OutArgs,
    /// Coupling strengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
    pub epsilon: Vec<f64>,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    #[command(flatten)]
    pub io: OutArgs,
    #[arg(long, value_enum, default_value_t = Model::Dkm)]
    pub model: Model,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = IcMode::Random)]
    pub ic: IcMode,
    #[arg(long, default_value_t = 0.8)]
    pub bias_amplitude: f64,
    /// Mode the biased initial condition leans toward (default: leading mode).
    #[arg(long)]
    pub bias_mode: Option<usize>,
    /// Also export log10 |mu_k(t)|.
    #[arg(long)]
    pub contributions: bool,
    /// Keep every stride-th Euler step (default: one row per sigma).
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub io: OutArgs,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Number of leading modes to report.
    #[arg(long, default_value_t = 2)]
    pub modes: usize,
    /// Also write every eigenvector.
    #[arg(long)]
    pub eigenvectors: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DirectionArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    #[command(flatten)]
    pub io: OutArgs,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, value_enum, default_value_t = IcMode::Random)]
    pub ic: IcMode,
    #[arg(long, default_value_t = 0.8)]
    pub bias_amplitude: f64,
    #[arg(long, default_value_t = DIRECTION_THRESHOLD)]
    pub threshold: f64,
    /// Positive-direction mode (default: best leading mode).
    #[arg(long)]
    pub pos_mode: Option<usize>,
    /// Negative-direction mode (default: second leading mode).
    #[arg(long)]
    pub neg_mode: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write into this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the recorded worker count.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailedCell {
    pub cell: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub command: Command,
    /// Values derived from the command: speed, angular frequency, seeds.
    pub resolved: Value,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub failed: Vec<FailedCell>,
    pub duration_s: f64,
}

struct Recorder {
    dir: PathBuf,
    outputs: Vec<String>,
}

impl Recorder {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Recorder {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        export::write_file(&self.dir.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(name, &text)
    }

    fn finish(
        self,
        command: &Command,
        resolved: Value,
        seeds: Vec<u64>,
        failed: Vec<FailedCell>,
        started: Instant,
    ) -> Result<RunManifest> {
        let manifest = RunManifest {
            subcommand: command.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.clone(),
            resolved,
            seeds,
            outputs: self.outputs,
            failed,
            duration_s: started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        export::write_file(&self.dir.join("manifest.json"), &text)?;
        Ok(manifest)
    }
}

/// Network, delays and the speed they were built with.
pub struct Setup {
    pub net: Network,
    pub tau: DelayMatrix,
    pub nu: f64,
    pub omega: f64,
}

impl NetArgs {
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.omega_hz
    }

    pub fn build(&self) -> Result<Setup> {
        let (net, default_nu) = if let Some(path) = &self.network {
            (load_network(path)?, None)
        } else if let Some(density) = self.geometric {
            (
                synth_geometric_with(self.n, density, self.decay, self.net_seed)?,
                Some(GEOMETRIC_SPEED),
            )
        } else {
            (
                build_ring(self.n, self.k)?,
                Some(ring_default_speed(
                    self.n,
                    self.k,
                    DelaySpan::ConnectedPairs,
                )),
            )
        };
        let nu = match (self.nu, default_nu) {
            (Some(nu), _) | (None, Some(nu)) => nu,
            (None, None) => bail!("--nu is required with --network"),
        };
        let tau = delays_from_distances(&net, nu)?;
        Ok(Setup {
            net,
            tau,
            nu,
            omega: self.omega(),
        })
    }
}

impl Setup {
    pub fn spectrum(&self, epsilon: f64) -> Result<Spectrum> {
        Ok(build_delay_operator(&self.net, &self.tau, self.omega, epsilon)?.spectrum()?)
    }

    fn resolved(&self) -> Value {
        json!({
            "n": self.net.n(),
            "edges": self.net.edge_count(),
            "circulant": self.net.is_circulant,
            "nu": self.nu,
            "omega": self.omega,
            "max_delay": self.tau.max_connected(&self.net),
            "min_delay": self.tau.min_connected(&self.net),
        })
    }
}

fn sim_config(
    time: &TimeArgs,
    omega: f64,
    epsilon: f64,
    seed: u64,
    record_every: usize,
) -> SimConfig {
    SimConfig {
        omega: Frequencies::Uniform(omega),
        epsilon,
        dt: time.dt,
        t_end: time.t_end,
        sigma_step: time.sigma,
        seed,
        history: time.history.into(),
        record_every,
    }
}

/// Runs one model from `theta0`. Phase models record every `record_every`
/// Euler steps; the complex flow always records once per sigma.
pub fn run_model(
    model: Model,
    setup: &Setup,
    cfg: &SimConfig,
    theta0: &[f64],
    spec: Option<&Spectrum>,
) -> Result<PhaseTrajectory> {
    let traj = match model {
        Model::Km => integrate_km(&setup.net, cfg, theta0)?,
        Model::Dkm => integrate_dkm(&setup.net, &setup.tau, cfg, theta0)?,
        Model::Phaselag => {
            let eta = setup.tau.tau.map(|t| setup.omega * t);
            integrate_phase_lag(&setup.net, &eta, cfg, theta0)?
        }
        Model::Complex => {
            let op = build_delay_operator(&setup.net, &setup.tau, setup.omega, cfg.epsilon)?;
            let owned;
            let spec = match spec {
                Some(s) => s,
                None => {
                    owned = op.spectrum()?;
                    &owned
                }
            };
            complex_trajectory(
                &ComplexState::from_phases(theta0),
                &op,
                setup.omega,
                cfg,
                spec,
            )?
        }
    };
    Ok(traj)
}

fn initial_condition(
    ic: IcMode,
    n: usize,
    seed: u64,
    pattern: Option<&[f64]>,
    amplitude: f64,
) -> Result<Vec<f64>> {
    match (ic, pattern) {
        (IcMode::Random, _) => Ok(random_ic(n, seed)),
        (IcMode::Biased, Some(p)) => Ok(biased_ic(p, amplitude, seed)?),
        (IcMode::Biased, None) => bail!("biased initial condition needs a pattern"),
    }
}

fn default_stride(time: &TimeArgs) -> usize {
    ((time.sigma / time.dt).round() as usize).max(1)
}

fn label(err: &anyhow::Error) -> String {
    format!("{err:#}")
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub seed: u64,
    pub r_km: f64,
    pub r_dkm: f64,
    pub r_complex_delayed: f64,
    pub r_complex_undelayed: f64,
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub failed: Vec<FailedCell>,
    pub manifest: RunManifest,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("epsilon,seed,r_km,r_dkm,r_complex_delayed,r_complex_undelayed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.epsilon, r.seed, r.r_km, r.r_dkm, r.r_complex_delayed, r.r_complex_undelayed
        ));
    }
    out
}

fn sweep_cell(
    args: &SweepArgs,
    setup: &Setup,
    undelayed: &Setup,
    eps: f64,
    seed: u64,
) -> Result<SweepRow> {
    let theta0 = random_ic(setup.net.n(), seed);
    let cfg = sim_config(
        &args.time,
        setup.omega,
        eps,
        seed,
        default_stride(&args.time),
    );
    let t1 = args.time.t_end;
    let mean = |traj: PhaseTrajectory| -> Result<f64> { Ok(mean_order_parameter(&traj, 0.0, t1)?) };
    Ok(SweepRow {
        epsilon: eps,
        seed,
        r_km: mean(run_model(Model::Km, setup, &cfg, &theta0, None)?)?,
        r_dkm: mean(run_model(Model::Dkm, setup, &cfg, &theta0, None)?)?,
        r_complex_delayed: mean(run_model(Model::Complex, setup, &cfg, &theta0, None)?)?,
        r_complex_undelayed: mean(run_model(Model::Complex, undelayed, &cfg, &theta0, None)?)?,
    })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepOutcome> {
    let started = Instant::now();
    if args.epsilon.is_empty() || args.seeds == 0 {
        bail!("sweep needs at least one coupling strength and one seed");
    }
    let setup = args.net.build()?;
    let undelayed = Setup {
        net: setup.net.clone(),
        tau: DelayMatrix::zeros(setup.net.n()),
        nu: f64::INFINITY,
        omega: setup.omega,
    };
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
    let cells: Vec<(f64, u64)> = args
        .epsilon
        .iter()
        .flat_map(|&e| seeds.iter().map(move |&s| (e, s)))
        .collect();
    let results = map_cells(&cells, args.io.workers, |&(eps, seed)| {
        sweep_cell(args, &setup, &undelayed, eps, seed)
    });

    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (&(eps, seed), res) in cells.iter().zip(results) {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failed.push(FailedCell {
                cell: format!("epsilon={eps} seed={seed}"),
                error: label(&e),
            }),
        }
    }
    let mut rec = Recorder::new(&args.io.out)?;
    rec.write("sweep.csv", &sweep_csv(&rows))?;
    let command = Command::Sweep(args.clone());
    let manifest = rec.finish(&command, setup.resolved(), seeds, failed.clone(), started)?;
    Ok(SweepOutcome {
        rows,
        failed,
        manifest,
    })
}

// ---------------------------------------------------------------- simulate

pub struct SimulateOutcome {
    pub trajectory: PhaseTrajectory,
    pub r_trace: Vec<f64>,
    pub mean_r: f64,
    pub final_r: f64,
    pub manifest: RunManifest,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateOutcome> {
    let started = Instant::now();
    let setup = args.net.build()?;
    let needs_spec =
        args.model == Model::Complex || args.ic == IcMode::Biased || args.contributions;
    let spec = if needs_spec {
        Some(setup.spectrum(args.epsilon)?)
    } else {
        None
    };
    let pattern = match (&spec, args.ic) {
        (Some(s), IcMode::Biased) => {
            let mode = match args.bias_mode {
                Some(m) => m,
                None => leading_modes(s, 1)?[0],
            };
            Some(predicted_pattern(s, mode)?)
        }
        _ => None,
    };
    let n = setup.net.n();
    let theta0 = initial_condition(
        args.ic,
        n,
        args.seed,
        pattern.as_deref(),
        args.bias_amplitude,
    )?;
    let stride = args.stride.unwrap_or_else(|| default_stride(&args.time));
    let cfg = sim_config(&args.time, setup.omega, args.epsilon, args.seed, stride);
    let traj = run_model(args.model, &setup, &cfg, &theta0, spec.as_ref())?;

    let r_trace = order_parameter_trace(&traj);
    let mean_r = mean_order_parameter(&traj, 0.0, args.time.t_end)?;
    let final_r = order_parameter(traj.final_phases());

    let mut rec = Recorder::new(&args.io.out)?;
    rec.write("trajectory.csv", &export::trajectory_csv(&traj, 1))?;
    rec.write(
        "order_parameter.csv",
        &export::series_csv("r", &traj.times, &r_trace),
    )?;
    if let (true, Some(spec)) = (args.contributions, &spec) {
        let states: Vec<ComplexState> = traj
            .phases
            .iter()
            .map(|p| ComplexState::from_phases(p))
            .collect();
        let table = contributions_over(&states, spec)?;
        let mut out = String::from("t");
        for k in 1..=n {
            out.push_str(&format!(",log10_mu_{k}"));
        }
        out.push('\n');
        for (t, row) in traj.times.iter().zip(&table.log_abs) {
            out.push_str(&t.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        rec.write("contributions.csv", &out)?;
    }
    rec.json(
        "summary.json",
        &json!({
            "model": args.model,
            "mean_r": mean_r,
            "final_r": final_r,
            "samples": traj.len(),
        }),
    )?;
    let command = Command::Simulate(args.clone());
    let manifest = rec.finish(
        &command,
        setup.resolved(),
        vec![args.seed],
        Vec::new(),
        started,
    )?;
    Ok(SimulateOutcome {
        trajectory: traj,
        r_trace,
        mean_r,
        final_r,
        manifest,
    })
}

// ---------------------------------------------------------------- predict

pub struct PredictOutcome {
    pub spectrum: Spectrum,
    pub undelayed: Spectrum,
    pub leading: Vec<usize>,
    pub patterns: Vec<Vec<f64>>,
    pub manifest: RunManifest,
}

pub fn cmd_predict(args: &PredictArgs) -> Result<PredictOutcome> {
    let started = Instant::now();
    let setup = args.net.build()?;
    let n = setup.net.n();
    if args.modes == 0 || args.modes > n {
        bail!("--modes must lie in 1..={n}");
    }
    let spec = setup.spectrum(args.epsilon)?;
    let undelayed = build_delay_operator(
        &setup.net,
        &DelayMatrix::zeros(n),
        setup.omega,
        args.epsilon,
    )?
    .spectrum()?;
    let leading = leading_modes(&spec, args.modes)?;
    let patterns = leading
        .iter()
        .map(|&k| predicted_pattern(&spec, k))
        .collect::<delay_kuramoto::Result<Vec<_>>>()?;

    let mut rec = Recorder::new(&args.io.out)?;
    rec.write("eigenvalues.csv", &export::eigenvalues_csv(&spec))?;
    rec.write(
        "eigenvalues_undelayed.csv",
        &export::eigenvalues_csv(&undelayed),
    )?;
    if args.eigenvectors {
        rec.write("eigenvectors.csv", &export::eigenvectors_csv(&spec))?;
    }
    for (&k, p) in leading.iter().zip(&patterns) {
        rec.write(&format!("pattern_mode_{k}.csv"), &export::pattern_csv(p))?;
    }
    let lambda = |z: Complex64| json!([z.re, z.im]);
    rec.json(
        "leading_modes.json",
        &json!({
            "ordering": spec.ordering,
            "leading": leading,
            "eigenvalues": leading.iter().map(|&k| lambda(spec.eigenvalue(k))).collect::<Vec<_>>(),
            "undelayed_leading": leading_modes(&undelayed, args.modes)?,
        }),
    )?;
    let command = Command::Predict(args.clone());
    let manifest = rec.finish(&command, setup.resolved(), Vec::new(), Vec::new(), started)?;
    Ok(PredictOutcome {
        spectrum: spec,
        undelayed,
        leading,
        patterns,
        manifest,
    })
}

// ---------------------------------------------------------------- direction

pub struct DirectionOutcome {
    pub stats: DirectionStats,
    pub pos_mode: usize,
    pub neg_mode: usize,
    /// Final phases per completed seed, in seed order.
    pub finals: Vec<(u64, Vec<f64>)>,
    pub spectrum: Spectrum,
    pub failed: Vec<FailedCell>,
    pub manifest: RunManifest,
}

pub fn cmd_direction(args: &DirectionArgs) -> Result<DirectionOutcome> {
    let started = Instant::now();
    if args.seeds == 0 {
        bail!("--seeds must be positive");
    }
    let setup = args.net.build()?;
    let spec = setup.spectrum(args.epsilon)?;
    let (pos_mode, neg_mode) = match (args.pos_mode, args.neg_mode) {
        (Some(p), Some(q)) => (p, q),
        (p, q) => {
            let lead = leading_modes(&spec, 2)?;
            (p.unwrap_or(lead[0]), q.unwrap_or(lead[1]))
        }
    };
    let pos_pattern = predicted_pattern(&spec, pos_mode)?;
    let n = setup.net.n();
    let cfg_for = |seed| sim_config(&args.time, setup.omega, args.epsilon, seed, usize::MAX);
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();

    let results = map_cells(
        &seeds,
        args.io.workers,
        |&seed| -> Result<(DirectionRecord, Vec<f64>)> {
            let theta0 =
                initial_condition(args.ic, n, seed, Some(&pos_pattern), args.bias_amplitude)?;
            let traj = run_model(Model::Dkm, &setup, &cfg_for(seed), &theta0, None)?;
            let last = traj.final_phases().to_vec();
            let call = classify_direction(&last, &spec, pos_mode, neg_mode, args.threshold)?;
            Ok((
                DirectionRecord {
                    seed,
                    rho_pos: call.rho_pos,
                    rho_neg: call.rho_neg,
                    label: call.direction.label(),
                },
                last,
            ))
        },
    );

    let mut records = Vec::new();
    let mut finals = Vec::new();
    let mut failed = Vec::new();
    for (&seed, res) in seeds.iter().zip(results) {
        match res {
            Ok((rec, last)) => {
                records.push(rec);
                finals.push((seed, last));
            }
            Err(e) => failed.push(FailedCell {
                cell: format!("seed={seed}"),
                error: label(&e),
            }),
        }
    }
    let stats = DirectionStats::from_records(records);
    let mut rec = Recorder::new(&args.io.out)?;
    rec.write("direction.csv", &export::direction_csv(&stats))?;
    rec.json(
        "direction_summary.json",
        &json!({
            "pos_mode": pos_mode,
            "neg_mode": neg_mode,
            "threshold": args.threshold,
            "ic": args.ic,
            "completed": stats.records.len(),
            "requested": seeds.len(),
            "positive": stats.positive,
            "negative": stats.negative,
            "neither": stats.neither,
        }),
    )?;
    let command = Command::Direction(args.clone());
    let manifest = rec.finish(&command, setup.resolved(), seeds, failed.clone(), started)?;
    Ok(DirectionOutcome {
        stats,
        pos_mode,
        neg_mode,
        finals,
        spectrum: spec,
        failed,
        manifest,
    })
}

// ---------------------------------------------------------------- dispatch

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Command stored in a manifest, with optional output and worker overrides.
pub fn replay_command(args: &ReplayArgs) -> Result<Command> {
    let mut command = read_manifest(&args.manifest)?.command;
    let io = match &mut command {
        Command::Sweep(a) => &mut a.io,
        Command::Simulate(a) => &mut a.io,
        Command::Predict(a) => &mut a.io,
        Command::Direction(a) => &mut a.io,
        Command::Replay(_) => bail!("a manifest cannot record a replay"),
    };
    if let Some(out) = &args.out {
        io.out = out.clone();
    }
    if let Some(w) = args.workers {
        io.workers = w;
    }
    Ok(command)
}

/// Runs a command and returns its manifest. Failed cells are listed in the
/// manifest; the caller decides the exit status.
pub fn run(command: &Command) -> Result<RunManifest> {
    Ok(match command {
        Command::Sweep(a) => cmd_sweep(a)?.manifest,
        Command::Simulate(a) => cmd_simulate(a)?.manifest,
        Command::Predict(a) => cmd_predict(a)?.manifest,
        Command::Direction(a) => cmd_direction(a)?.manifest,
        Command::Replay(a) => run(&replay_command(a)?)?,
    })
}
