//! Run configuration, verb runners and result persistence for the `ecqt`
//! command-line tool.
//!
//! A run is described by one JSON document whose `verb` field selects the
//! runner; command-line flags override the output directory, format, worker
//! count and seed.  All times are in inverse-energy units with ħ = 1; results
//! quoted in τ = t/a map onto the `tau` column of the exports.
//!
//! Every runner writes a fixed set of file names inside the output
//! directory and returns a JSON summary.  CSV and JSON outputs carry no
//! timestamps, so the (config, seed, version) triple determines every byte.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::circuit::{self, ProtocolSpec};
use crate::deform::{self, SpectrumInit};
use crate::echam::{self, CouplingSchedule, ECHamiltonianSpec};
use crate::error::{Error, Result};
use crate::integrator::{self, IntegratorConfig, Stepping, Trajectory};
use crate::linalg::{self, c, serde_cmatrix, CMatrix, C64};
use crate::phases::{self, PhaseFeatures, PhaseLabel, Thresholds};
use crate::qstate::{DensityOperator, PureState, StateHistory};
use crate::reform;

pub const UNITS: &str = "hbar = 1; energies in units of the Hamiltonian scale; times in inverse energy";

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    /// Binary history (falls back to JSON for tabular outputs).
    Bin,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "bin" => Ok(Format::Bin),
            other => Err(Error::Config(format!("unknown format {other:?} (expected csv, json or bin)"))),
        }
    }
}

/// Named qubit states or explicit amplitudes `[[re, im], ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Named(NamedState),
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedState {
    Plus,
    Minus,
    Zero,
    One,
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Named(NamedState::Plus)
    }
}

impl InitialState {
    pub fn density(&self, dim: usize) -> Result<DensityOperator> {
        let psi = match self {
            InitialState::Named(NamedState::Zero) => PureState::basis(dim, 0),
            InitialState::Named(NamedState::One) if dim >= 2 => PureState::basis(dim, 1),
            InitialState::Named(NamedState::Plus) if dim == 2 => PureState::plus(),
            InitialState::Named(NamedState::Minus) if dim == 2 => PureState::minus(),
            InitialState::Named(n) => {
                return Err(Error::Config(format!("initial state {n:?} is not defined in dimension {dim}")))
            }
            InitialState::Amplitudes(a) => {
                if a.len() != dim {
                    return Err(Error::Config(format!("initial state has {} amplitudes, expected {dim}", a.len())));
                }
                let v: Vec<C64> = a.iter().map(|z| c(z[0], z[1])).collect();
                PureState::normalized(linalg::vector(&v))?
            }
        };
        Ok(psi.density())
    }
}

/// Classification settings attached to simulate/scan runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Features use the window [late_fraction · horizon, horizon].
    #[serde(default = "default_late_fraction")]
    pub late_fraction: f64,
    /// Memory distance defining the fidelity series; defaults to a_max.
    #[serde(default)]
    pub distance: Option<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_late_fraction() -> f64 {
    0.05
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { late_fraction: default_late_fraction(), distance: None, thresholds: Thresholds::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub spec: ECHamiltonianSpec,
    #[serde(with = "serde_cmatrix")]
    pub kicker: CMatrix,
    #[serde(default)]
    pub initial: InitialState,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub stepping: Stepping,
    /// Extra memory distances whose fidelity series are exported.
    #[serde(default)]
    pub fidelity_distances: Vec<f64>,
    #[serde(default)]
    pub classify: Option<ClassifyOptions>,
    /// Resource budget on the number of grid steps.
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    5_000_000
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be nonnegative, got {}", self.horizon)));
        }
        self.spec.validate(self.dt)?;
        if self.kicker.nrows() != self.spec.dim || self.kicker.ncols() != self.spec.dim {
            return Err(Error::Config(format!("kicker must be {0}x{0}", self.spec.dim)));
        }
        for &a in &self.fidelity_distances {
            crate::qstate::steps_for_distance(a, self.dt)?;
        }
        if let Some(cl) = &self.classify {
            if let Some(a) = cl.distance {
                crate::qstate::steps_for_distance(a, self.dt)?;
            }
        }
        self.initial.density(self.spec.dim)?;
        let steps = (self.horizon / self.dt).ceil();
        if steps > self.max_steps as f64 {
            return Err(Error::Budget(format!("{steps} grid steps exceed the budget of {}", self.max_steps)));
        }
        Ok(())
    }
}

/// A grid axis of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameter {
    /// Constant coupling of spec term `i`.
    Term(usize),
    /// Every nonzero memory distance of the spec.
    Distance,
    /// Every nonzero memory distance, with the horizon kept at a fixed
    /// multiple of the distance (τ = t/a units).
    DistanceTau { horizon_tau: f64 },
}

impl ScanParameter {
    fn name(&self) -> String {
        match self {
            ScanParameter::Term(i) => format!("term{i}"),
            ScanParameter::Distance | ScanParameter::DistanceTau { .. } => "a".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanAxis {
    pub parameter: ScanParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub base: SimulateConfig,
    pub axes: Vec<ScanAxis>,
    #[serde(default = "default_cell_budget")]
    pub cell_budget: usize,
}

fn default_cell_budget() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReformulateConfig {
    /// The history-independent Hamiltonian to rewrite.
    #[serde(with = "serde_cmatrix")]
    pub target: CMatrix,
    #[serde(default)]
    pub initial: InitialState,
    pub distance: f64,
    pub dt: f64,
    pub horizon: f64,
}

/// How the circuit verb realises the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CircuitPath {
    /// Interferometric couplings and controlled-SWAP half-steps.
    #[default]
    Interferometric,
    /// Exact generator access followed by positive splitting and
    /// density-matrix exponentiation.
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub spec: ECHamiltonianSpec,
    #[serde(with = "serde_cmatrix")]
    pub kicker: CMatrix,
    #[serde(default)]
    pub initial: InitialState,
    /// Duration simulated after the prehistory.
    pub duration: f64,
    /// Trotter steps m.
    pub steps: usize,
    #[serde(default)]
    pub path: CircuitPath,
    /// Copies per exponentiation pass on the general path.
    #[serde(default = "default_copies")]
    pub copies: usize,
    /// Finite-sample emulation of the generator estimate (general path).
    #[serde(default)]
    pub shots: Option<u64>,
    /// Also run the integrator on the same grid and report the deviation.
    #[serde(default)]
    pub compare: bool,
    /// Target accuracy for the resource estimate.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_copies() -> usize {
    100
}

fn default_epsilon() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// History file written by `simulate` (binary or JSON).
    pub history: PathBuf,
    pub distance: f64,
    /// First grid index of the history-dependent segment.
    #[serde(default)]
    pub start_index: Option<usize>,
    #[serde(default = "default_late_fraction")]
    pub late_fraction: f64,
    /// Optional window length for transition detection.
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "oracle", rename_all = "snake_case")]
pub enum OracleConfig {
    /// Level populations under ℍ = H − ξρ̇ for each ξ.
    Localization { energies: Vec<f64>, populations: Vec<f64>, xis: Vec<f64>, t_max: f64, points: usize },
    /// Ground population, landing time and Lyapunov series of the
    /// finite-time landing schedule.
    Landing { xi: f64, delta_e: f64, p0_ground: f64, t_max: f64, points: usize },
    /// Short-memory reduction of the [[2,2]] couplings.
    NearMarkovian { lambda_tma: f64, lambda_r: f64, lambda_i: f64, distances: Vec<f64> },
    /// Relevant couplings that rewrite a fixed qubit Hamiltonian.
    TimeIndependent { e1: f64, e2: f64, s0: f64, distances: Vec<f64> },
    /// Scaling-law resources of the circuit protocol.
    Resources { monomials: u64, distances: u64, length: u64, duration: f64, epsilons: Vec<f64> },
}

/// Verb-specific record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "snake_case")]
pub enum VerbConfig {
    Simulate(SimulateConfig),
    Scan(ScanConfig),
    Reformulate(ReformulateConfig),
    Circuit(CircuitConfig),
    Classify(ClassifyConfig),
    Oracle(OracleConfig),
}

impl VerbConfig {
    pub fn name(&self) -> &'static str {
        match self {
            VerbConfig::Simulate(_) => "simulate",
            VerbConfig::Scan(_) => "scan",
            VerbConfig::Reformulate(_) => "reformulate",
            VerbConfig::Circuit(_) => "circuit",
            VerbConfig::Classify(_) => "classify",
            VerbConfig::Oracle(_) => "oracle",
        }
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub units: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(flatten)]
    pub verb: VerbConfig,
}

impl RunConfig {
    /// Parse a JSON document; syntax and schema errors carry line/column.
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// SHA-256 of the canonical serialisation.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<()> {
        match &self.verb {
            VerbConfig::Simulate(s) => s.validate(),
            VerbConfig::Scan(s) => scan_cells(s).map(|_| ()),
            VerbConfig::Reformulate(r) => {
                if !(r.dt > 0.0) || !(r.horizon >= r.distance) {
                    return Err(Error::Config("reformulate needs dt > 0 and horizon ≥ distance".into()));
                }
                crate::qstate::steps_for_distance(r.distance, r.dt)?;
                r.initial.density(r.target.nrows()).map(|_| ())
            }
            VerbConfig::Circuit(cc) => {
                if cc.steps == 0 || !(cc.duration > 0.0) {
                    return Err(Error::Config("circuit needs steps ≥ 1 and duration > 0".into()));
                }
                cc.spec.validate(cc.duration / cc.steps as f64)?;
                cc.initial.density(cc.spec.dim).map(|_| ())
            }
            VerbConfig::Classify(c) => {
                if !(0.0..1.0).contains(&c.late_fraction) {
                    return Err(Error::Config("late_fraction must lie in [0, 1)".into()));
                }
                Ok(())
            }
            VerbConfig::Oracle(_) => Ok(()),
        }
    }
}

/// Resolved run settings shared by all runners.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub format: Format,
    pub workers: usize,
    pub seed: u64,
    pub config_digest: String,
}

/// What a runner produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Validate and dispatch; the summary is also written as `summary.json`.
pub fn run(cfg: &RunConfig, ctx: &RunContext) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&ctx.out_dir)?;
    let mut out = match &cfg.verb {
        VerbConfig::Simulate(s) => run_simulate(s, ctx)?,
        VerbConfig::Scan(s) => run_scan(s, ctx)?,
        VerbConfig::Reformulate(r) => run_reformulate(r, ctx)?,
        VerbConfig::Circuit(cc) => run_circuit(cc, ctx)?,
        VerbConfig::Classify(c) => run_classify(c, ctx)?,
        VerbConfig::Oracle(o) => run_oracle(o, ctx)?,
    };
    if let Value::Object(map) = &mut out.summary {
        map.insert("verb".into(), json!(cfg.verb.name()));
        map.insert("config_digest".into(), json!(ctx.config_digest));
        map.insert("seed".into(), json!(ctx.seed));
        map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        map.insert("units".into(), json!(UNITS));
    }
    let path = write_json(&ctx.out_dir, "summary.json", &out.summary)?;
    out.files.push(path);
    Ok(out)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn evolve_config(cfg: &SimulateConfig) -> Result<Trajectory> {
    let rho0 = cfg.initial.density(cfg.spec.dim)?;
    let icfg = IntegratorConfig::new(cfg.dt, cfg.horizon).with_stepping(cfg.stepping);
    let mut traj = integrator::evolve(&cfg.spec, &cfg.kicker, &rho0, &icfg)?;
    for &a in &cfg.fidelity_distances {
        if !traj.fidelity.iter().any(|f| (f.distance - a).abs() < 1e-12) {
            traj.add_fidelity_series(a)?;
        }
    }
    Ok(traj)
}

/// SHA-256 of the binary history encoding.
pub fn trajectory_digest(history: &StateHistory) -> Result<String> {
    let mut bytes = Vec::new();
    history.write_binary(&mut bytes)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn classify_trajectory(traj: &Trajectory, spec: &ECHamiltonianSpec, opts: &ClassifyOptions) -> Result<(PhaseLabel, PhaseFeatures)> {
    let a = opts.distance.unwrap_or_else(|| spec.a_max());
    if !(a > 0.0) {
        return Err(Error::Config("classification needs a positive memory distance".into()));
    }
    let f = phases::extract_history_features(&traj.history, a, traj.ec_start_index, opts.late_fraction, &opts.thresholds)?;
    Ok((phases::classify(&f, &opts.thresholds), f))
}

pub fn run_simulate(cfg: &SimulateConfig, ctx: &RunContext) -> Result<RunOutcome> {
    let traj = evolve_config(cfg)?;
    let digest = trajectory_digest(&traj.history)?;
    let mut files = Vec::new();
    match ctx.format {
        Format::Csv => files.push(write_trajectory_csv(&ctx.out_dir, &traj, cfg.spec.a_max())?),
        Format::Json => {
            let doc = json!({
                "history": traj.history.to_json(),
                "energies": traj.energies,
                "ec_start_index": traj.ec_start_index,
                "fidelity": traj.fidelity,
            });
            files.push(write_json(&ctx.out_dir, "trajectory.json", &doc)?);
        }
        Format::Bin => {
            let path = ctx.out_dir.join("history.bin");
            let mut w = BufWriter::new(File::create(&path)?);
            traj.history.write_binary(&mut w)?;
            w.flush()?;
            files.push(path);
        }
    }
    let (emin, emax) = traj.energies.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let finals: Vec<Value> = traj
        .fidelity
        .iter()
        .map(|f| json!({"distance": f.distance, "final": f.values.last().copied().unwrap_or(f64::NAN)}))
        .collect();
    let mut summary = json!({
        "steps": traj.history.len() - 1,
        "ec_start_index": traj.ec_start_index,
        "energy_min": emin,
        "energy_max": emax,
        "final_fidelity": finals,
        "final_populations": traj.final_state().populations(),
        "diagnostics": traj.diagnostics,
        "trajectory_digest": digest,
    });
    if let Some(opts) = &cfg.classify {
        let (label, features) = classify_trajectory(&traj, &cfg.spec, opts)?;
        summary["label"] = json!(label.short());
        summary["features"] = serde_json::to_value(&features)?;
    }
    Ok(RunOutcome { files, summary })
}

fn write_trajectory_csv(dir: &Path, traj: &Trajectory, a_max: f64) -> Result<PathBuf> {
    let path = dir.join("trajectory.csv");
    let mut w = csv::Writer::from_path(&path)?;
    let d = traj.history.dim();
    let mut header = vec!["t".to_string()];
    if a_max > 0.0 {
        header.push("tau".into());
    }
    for i in 0..d {
        for j in 0..d {
            header.push(format!("rho{i}{j}_re"));
            header.push(format!("rho{i}{j}_im"));
        }
    }
    header.push("energy".into());
    for f in &traj.fidelity {
        header.push(format!("fidelity_a{}", f.distance));
    }
    w.write_record(&header)?;
    let times = traj.times();
    for (k, &t) in times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        if a_max > 0.0 {
            row.push((t / a_max).to_string());
        }
        let m = traj.history.state(k).matrix();
        for i in 0..d {
            for j in 0..d {
                row.push(m[(i, j)].re.to_string());
                row.push(m[(i, j)].im.to_string());
            }
        }
        row.push(traj.energies[k].to_string());
        for f in &traj.fidelity {
            row.push(if k >= f.start_index { f.values[k - f.start_index].to_string() } else { String::new() });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

/// One grid cell: axis values and the resolved simulate config.
#[derive(Debug, Clone)]
pub struct ScanCell {
    pub index: usize,
    pub coordinates: Vec<f64>,
    pub config: SimulateConfig,
}

/// Expand and validate the grid (row-major over the listed axes).
pub fn scan_cells(cfg: &ScanConfig) -> Result<Vec<ScanCell>> {
    if cfg.axes.is_empty() || cfg.axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::Config("a scan needs at least one nonempty axis".into()));
    }
    let n: usize = cfg.axes.iter().map(|a| a.values.len()).product();
    if n > cfg.cell_budget {
        return Err(Error::Budget(format!("{n} scan cells exceed the budget of {}", cfg.cell_budget)));
    }
    let mut cells = Vec::with_capacity(n);
    for index in 0..n {
        let mut rest = index;
        let mut coords = vec![0.0; cfg.axes.len()];
        for (k, axis) in cfg.axes.iter().enumerate().rev() {
            coords[k] = axis.values[rest % axis.values.len()];
            rest /= axis.values.len();
        }
        let mut sim = cfg.base.clone();
        for (axis, &v) in cfg.axes.iter().zip(&coords) {
            apply_axis(&mut sim, &axis.parameter, v)?;
        }
        sim.validate()?;
        cells.push(ScanCell { index, coordinates: coords, config: sim });
    }
    Ok(cells)
}

fn apply_axis(sim: &mut SimulateConfig, p: &ScanParameter, v: f64) -> Result<()> {
    match p {
        ScanParameter::Term(i) => {
            let term = sim
                .spec
                .terms
                .get_mut(*i)
                .ok_or_else(|| Error::Config(format!("scan axis refers to missing term {i}")))?;
            term.coupling = CouplingSchedule::constant(v);
        }
        ScanParameter::Distance | ScanParameter::DistanceTau { .. } => {
            for term in &mut sim.spec.terms {
                for f in &mut term.monomial.factors {
                    if f.distance != 0.0 {
                        f.distance = v;
                    }
                }
            }
            if let ScanParameter::DistanceTau { horizon_tau } = p {
                sim.horizon = (horizon_tau * v / sim.dt).round() * sim.dt;
            }
        }
    }
    Ok(())
}

/// Per-cell result of a scan.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub index: usize,
    pub coordinates: Vec<f64>,
    pub label: String,
    pub features: PhaseFeatures,
    pub digest: String,
}

/// Grid axes, per-cell outcomes and provenance.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub cells: Vec<CellResult>,
    pub config_digest: String,
    pub version: String,
}

/// Evaluate every cell (in parallel up to `workers`), results ordered by
/// cell index.
pub fn evaluate_scan(cfg: &ScanConfig, workers: usize, config_digest: &str) -> Result<SweepResult> {
    let cells = scan_cells(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let opts = cfg.base.classify.clone().unwrap_or_default();
    let mut results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let traj = evolve_config(&cell.config)?;
                let (label, features) = classify_trajectory(&traj, &cell.config.spec, &opts)?;
                Ok(CellResult {
                    index: cell.index,
                    coordinates: cell.coordinates.clone(),
                    label: label.short(),
                    features,
                    digest: trajectory_digest(&traj.history)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    results.sort_by_key(|r| r.index);
    Ok(SweepResult {
        axes: cfg.axes.iter().map(|a| a.parameter.name()).collect(),
        cells: results,
        config_digest: config_digest.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

pub fn run_scan(cfg: &ScanConfig, ctx: &RunContext) -> Result<RunOutcome> {
    let sweep = evaluate_scan(cfg, ctx.workers, &ctx.config_digest)?;
    let mut files = Vec::new();
    match ctx.format {
        Format::Csv => {
            let path = ctx.out_dir.join("phase_map.csv");
            let mut w = csv::Writer::from_path(&path)?;
            let mut header: Vec<String> = vec!["cell".into()];
            header.extend(sweep.axes.iter().cloned());
            header.push("label".into());
            header.extend(PhaseFeatures::columns().iter().map(|s| s.to_string()));
            header.push("digest".into());
            w.write_record(&header)?;
            for cell in &sweep.cells {
                let mut row = vec![cell.index.to_string()];
                row.extend(cell.coordinates.iter().map(f64::to_string));
                row.push(cell.label.clone());
                row.extend(cell.features.values().iter().map(f64::to_string));
                row.push(cell.digest.clone());
                w.write_record(&row)?;
            }
            w.flush()?;
            files.push(path);
        }
        Format::Json | Format::Bin => files.push(write_json(&ctx.out_dir, "sweep.json", &serde_json::to_value(&sweep)?)?),
    }
    let labels: Vec<&str> = sweep.cells.iter().map(|c| c.label.as_str()).collect();
    Ok(RunOutcome { files, summary: json!({ "cells": sweep.cells.len(), "labels": labels }) })
}

// ---------------------------------------------------------------------------
// reformulate
// ---------------------------------------------------------------------------

pub fn run_reformulate(cfg: &ReformulateConfig, ctx: &RunContext) -> Result<RunOutcome> {
    let dim = cfg.target.nrows();
    if dim != 2 {
        return Err(Error::NonQubit(dim));
    }
    let rho0 = cfg.initial.density(dim)?;
    let spec = ECHamiltonianSpec::sqt(cfg.target.clone());
    let traj = integrator::evolve(&spec, &cfg.target, &rho0, &IntegratorConfig::new(cfg.dt, cfg.horizon))?;
    let h = &traj.history;
    let s = h.steps_for_distance(cfg.distance)?;
    let mut rows: Vec<(f64, Option<reform::QubitECCouplings>)> = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut list = Vec::new();
    let mut last_degenerate = None;
    for k in s..h.len() {
        match reform::ec_couplings_one_qubit(&cfg.target, h.state(k), h.state(k - s)) {
            Ok(cp) => {
                let back = cp.assemble(h.state(k).matrix(), h.state(k - s).matrix());
                max_residual = max_residual.max(linalg::max_abs_diff(&back, &cfg.target));
                list.push((k, cp));
                rows.push((h.time(k), Some(cp)));
            }
            Err(Error::DegenerateOverlap { w }) => {
                last_degenerate = Some(w);
                rows.push((h.time(k), None));
            }
            Err(e) => return Err(e),
        }
    }
    if let (true, Some(w)) = (list.is_empty(), last_degenerate) {
        return Err(Error::DegenerateOverlap { w });
    }
    let witness = reform::sqt_witness(&list, &cfg.target, h, cfg.distance)?;
    let header = ["t", "lambda_t", "lambda_tma", "lambda_r", "lambda_i"];
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(t, cp)| {
            let mut r = vec![t.to_string()];
            match cp {
                Some(cp) => r.extend([cp.lambda_t, cp.lambda_tma, cp.lambda_r, cp.lambda_i].iter().map(f64::to_string)),
                None => r.extend(std::iter::repeat(String::new()).take(4)),
            }
            r
        })
        .collect();
    let files = vec![write_table(&ctx.out_dir, "couplings", ctx.format, &header, &table)?];
    Ok(RunOutcome {
        files,
        summary: json!({
            "points": rows.len(),
            "degenerate_points": rows.iter().filter(|r| r.1.is_none()).count(),
            "max_reassembly_residual": max_residual,
            "constraint_residuals": witness,
        }),
    })
}

// ---------------------------------------------------------------------------
// circuit
// ---------------------------------------------------------------------------

pub fn run_circuit(cfg: &CircuitConfig, ctx: &RunContext) -> Result<RunOutcome> {
    let delta = cfg.duration / cfg.steps as f64;
    let rho0 = cfg.initial.density(cfg.spec.dim)?;
    let a_max = cfg.spec.a_max();
    let pre = integrator::prehistory(&cfg.kicker, &rho0, a_max, delta)?;
    let mut summary = json!({ "delta": delta, "steps": cfg.steps });
    let states: Vec<DensityOperator> = match cfg.path {
        CircuitPath::Interferometric => {
            let p = ProtocolSpec::from_ec_spec(&cfg.spec, delta, cfg.steps)?;
            let (_, run) = circuit::evolve_ec_circuit(&p, &pre)?;
            summary["error_bound"] = json!(run.error_bound);
            summary["success_probability"] = json!(run.success_probability);
            let m = p.n_monomials().max(1) as u64;
            let n = cfg.spec.n_distances().max(1) as u64;
            let l = cfg.spec.max_length().max(1) as u64;
            summary["resources"] = serde_json::to_value(circuit::resource_estimate(m, n, l, cfg.duration, cfg.epsilon)?)?;
            run.states
        }
        CircuitPath::General => {
            // Exponentiation leaves slightly mixed states, so keep densities.
            let mut history = StateHistory::from_states(pre.t0(), pre.dt(), pre.states().iter().cloned())?;
            let mut out = vec![history.state(history.len() - 1).clone()];
            for k in 0..cfg.steps {
                let t = history.last_time();
                let mut hgen = echam::assemble(&cfg.spec, &history, t)?;
                if let Some(shots) = cfg.shots {
                    hgen = circuit::shot_noise_estimate(&hgen, shots, 1.0, ctx.seed.wrapping_add(k as u64))?;
                }
                let cur = out.last().unwrap();
                let next = if linalg::max_abs(&hgen) == 0.0 {
                    cur.clone()
                } else {
                    circuit::general_protocol_step(&hgen, cur, delta, cfg.copies, cfg.copies)?
                };
                history.push_state(next.clone())?;
                out.push(next);
            }
            out
        }
    };
    if cfg.compare {
        let icfg = IntegratorConfig::new(delta, a_max + cfg.duration);
        let traj = integrator::evolve(&cfg.spec, &cfg.kicker, &rho0, &icfg)?;
        let base = traj.ec_start_index;
        let dev = states
            .iter()
            .enumerate()
            .map(|(j, s)| linalg::trace_distance(s.matrix(), traj.history.state(base + j).matrix()))
            .fold(0.0, f64::max);
        summary["max_deviation_from_integrator"] = json!(dev);
    }
    let d = cfg.spec.dim;
    let mut header = vec!["t".to_string()];
    for i in 0..d {
        for j in 0..d {
            header.push(format!("rho{i}{j}_re"));
            header.push(format!("rho{i}{j}_im"));
        }
    }
    let table: Vec<Vec<String>> = states
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let mut r = vec![(a_max + j as f64 * delta).to_string()];
            for i in 0..d {
                for jj in 0..d {
                    r.push(s.matrix()[(i, jj)].re.to_string());
                    r.push(s.matrix()[(i, jj)].im.to_string());
                }
            }
            r
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let files = vec![write_table(&ctx.out_dir, "circuit_states", ctx.format, &header_refs, &table)?];
    let last = states.last().unwrap();
    summary["final_state"] = json!(serde_cmatrix::to_rows(last.matrix()));
    summary["initial_state"] = json!(serde_cmatrix::to_rows(states[0].matrix()));
    Ok(RunOutcome { files, summary })
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

/// Load a history written by `simulate` in binary or JSON form.
pub fn load_history(path: &Path) -> Result<StateHistory> {
    let bytes = fs::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if bytes.first() == Some(&b'{') {
        let v: Value = serde_json::from_slice(&bytes)?;
        let doc = v.get("history").unwrap_or(&v);
        StateHistory::from_json(doc)
    } else {
        StateHistory::read_binary(&bytes[..])
    }
}

pub fn run_classify(cfg: &ClassifyConfig, ctx: &RunContext) -> Result<RunOutcome> {
    let history = load_history(&cfg.history)?;
    let start = cfg.start_index.unwrap_or(history.steps_for_distance(cfg.distance)?);
    let features = phases::extract_history_features(&history, cfg.distance, start, cfg.late_fraction, &cfg.thresholds)?;
    let label = phases::classify(&features, &cfg.thresholds);
    let mut summary = json!({ "label": label.short(), "features": features });
    let mut files = Vec::new();
    if let Some(window) = cfg.window {
        let series = phases::PhaseSeries::from_history(&history, cfg.distance, start)?;
        let labels = phases::window_labels(&series, window, &cfg.thresholds)?;
        let transitions = phases::transitions_from_labels(&labels);
        summary["transitions"] = json!(transitions
            .iter()
            .map(|t| json!({"time": t.time, "from": t.from.short(), "to": t.to.short()}))
            .collect::<Vec<_>>());
        summary["final_stable_label"] = json!(phases::final_stable_label(&labels).map(|l| l.short()));
        let table: Vec<Vec<String>> = labels.iter().map(|(t, l)| vec![t.to_string(), l.short()]).collect();
        files.push(write_table(&ctx.out_dir, "window_labels", ctx.format, &["t_start", "label"], &table)?);
    }
    let row: Vec<String> = std::iter::once(label.short()).chain(features.values().iter().map(f64::to_string)).collect();
    let mut header = vec!["label"];
    header.extend(PhaseFeatures::columns().iter().copied());
    files.push(write_table(&ctx.out_dir, "features", ctx.format, &header, &[row])?);
    Ok(RunOutcome { files, summary })
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn grid(t_max: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
}

pub fn run_oracle(cfg: &OracleConfig, ctx: &RunContext) -> Result<RunOutcome> {
    let (name, header, table): (&str, Vec<String>, Vec<Vec<String>>) = match cfg {
        OracleConfig::Localization { energies, populations, xis, t_max, points } => {
            let s = SpectrumInit::new(energies.clone(), populations.clone())?;
            let mut header = vec!["xi".to_string(), "t".into()];
            header.extend((0..s.dim()).map(|n| format!("p{n}")));
            let mut table = Vec::new();
            for &xi in xis {
                for t in grid(*t_max, *points) {
                    let p = deform::localization_profile(&s, xi, t);
                    let mut r = vec![xi.to_string(), t.to_string()];
                    r.extend(p.iter().map(f64::to_string));
                    table.push(r);
                }
            }
            ("localization", header, table)
        }
        OracleConfig::Landing { xi, delta_e, p0_ground, t_max, points } => {
            let t_land = deform::finite_landing_time(*xi, *delta_e, *p0_ground)?;
            let table = grid(*t_max, *points)
                .into_iter()
                .map(|t| {
                    let p = deform::landing_ground_population(*xi, *delta_e, *p0_ground, t);
                    let l = if t < t_land { deform::lyapunov(*xi, *delta_e, *p0_ground, t).ok() } else { None };
                    vec![t.to_string(), p.to_string(), l.map(|v| v.to_string()).unwrap_or_default(), t_land.to_string()]
                })
                .collect();
            ("landing", vec!["t".into(), "ground_population".into(), "lyapunov".into(), "t_land".into()], table)
        }
        OracleConfig::NearMarkovian { lambda_tma, lambda_r, lambda_i, distances } => {
            let table = distances
                .iter()
                .map(|&a| {
                    let m = deform::near_markovian_map(*lambda_tma, *lambda_r, *lambda_i, a)?;
                    Ok(vec![a.to_string(), m.xi1.to_string(), m.xi2_i.to_string(), m.xi_eff.to_string(), m.h_scale.to_string()])
                })
                .collect::<Result<Vec<_>>>()?;
            ("near_markovian", ["a", "xi1", "xi2_i", "xi_eff", "h_scale"].map(String::from).to_vec(), table)
        }
        OracleConfig::TimeIndependent { e1, e2, s0, distances } => {
            let table = distances
                .iter()
                .map(|&a| match reform::ec_couplings_time_independent(*e1, *e2, *s0, a) {
                    Ok((r, i)) => vec![a.to_string(), r.to_string(), i.to_string()],
                    Err(_) => vec![a.to_string(), String::new(), String::new()],
                })
                .collect();
            ("time_independent", ["a", "lambda_bar_r", "lambda_i"].map(String::from).to_vec(), table)
        }
        OracleConfig::Resources { monomials, distances, length, duration, epsilons } => {
            let table = epsilons
                .iter()
                .map(|&eps| {
                    let r = circuit::resource_estimate(*monomials, *distances, *length, *duration, eps)?;
                    Ok(vec![
                        eps.to_string(),
                        r.systems_per_step.to_string(),
                        r.trotter_steps.to_string(),
                        r.copy_base.to_string(),
                        r.log10_total_copies.to_string(),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            let header = ["epsilon", "systems_per_step", "trotter_steps", "copy_base", "log10_total_copies"];
            ("resources", header.map(String::from).to_vec(), table)
        }
    };
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = table.len();
    let files = vec![write_table(&ctx.out_dir, name, ctx.format, &header_refs, &table)?];
    Ok(RunOutcome { files, summary: json!({ "oracle": name, "rows": rows }) })
}

// ---------------------------------------------------------------------------
// writers
// ---------------------------------------------------------------------------

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(path)
}

/// A table as `<stem>.csv`, or as `<stem>.json` (array of row objects) for
/// the JSON and binary formats.
fn write_table(dir: &Path, stem: &str, format: Format, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(path)
        }
        Format::Json | Format::Bin => {
            let doc: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let obj: serde_json::Map<String, Value> = header
                        .iter()
                        .zip(r)
                        .map(|(h, v)| {
                            let val = v.parse::<f64>().ok().filter(|x| x.is_finite()).map(|x| json!(x)).unwrap_or(json!(v));
                            (h.to_string(), val)
                        })
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            write_json(dir, &format!("{stem}.json"), &Value::Array(doc))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_parses() {
        assert_eq!("bin".parse::<Format>().unwrap(), Format::Bin);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn config_errors_carry_position() {
        let err = RunConfig::from_json_str("{\n \"verb\": \"oracle\",\n \"oracle\": 3\n}").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn offgrid_distance_is_a_config_error() {
        let text = r#"{"verb": "simulate", "dt": 0.01, "horizon": 1.0,
            "kicker": {"pauli": [0, 0, 0, 1]},
            "spec": {"dim": 2, "sqt_part": {"pauli": [0, 0, 0, 0]},
                     "terms": [{"parity": "plus", "factors": [{"a": 0.333}],
                                "coupling": {"kind": "constant", "value": 1.0}}]}}"#;
        let cfg = RunConfig::from_json_str(text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }
}
