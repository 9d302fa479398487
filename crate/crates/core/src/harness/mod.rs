//! Experiment orchestration, reports and the command-line interface.
//!
//! Every run draws its sample from a seed derived from
//! `(master_seed, n, seed, δ index)`, so reports do not depend on the order
//! in which runs execute and are byte-for-byte reproducible. Wall-clock
//! timings are only recorded on request.

pub mod cli;
pub mod stats;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{
    sup_distance_at_samples, AnalyticDensity, Dataset, ProbeGrid, SmoothedReference,
};
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelSpec, NormKind, Profile};
use crate::levelset::{check_sandwich, BallUnion, GridSet, GridSpec, KdeLevelFamily, MAX_GRID_NODES};
use crate::schedule::{
    adaptive_select, bandwidth_grid, epsilon_schedule, sigma_schedule, tau_fixed, BandwidthGrid, EpsilonInputs,
    ParameterSet, ScheduleConfig,
};
use crate::splitter::{run_kde, ClusterOutput};
use crate::synthetic::{GroundTruthDensity, InstanceSpec};
use stats::{median, ols, Regression};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cluster,
    Adaptive,
    Rates,
    Uncertainty,
    Sandwich,
}

fn default_kernel() -> KernelSpec {
    KernelSpec {
        profile: Profile::Rectangular,
        norm: NormKind::Euclidean,
    }
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

/// Options of the adaptive mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveOptions {
    /// Explicit bandwidth set; the `n^{-1/d}`-net of `I_n` when empty.
    pub deltas: Vec<f64>,
    /// Keep only bandwidths satisfying the selection guarantee's premises
    /// for the instance (`2σ ≤ δ_thick`, `ε + (τ/c_sep)^κ ≤ (ρ** − ρ*)/9`).
    pub admissible_only: bool,
    /// Evenly thin the set to at most this many bandwidths (0: keep all).
    pub max_grid: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            deltas: Vec::new(),
            admissible_only: false,
            max_grid: 0,
        }
    }
}

/// Proportionality constants of the rate schedules
/// `ε_n = c_ε (ℓ_n ln ln n / n)^{γκ/(2γκ+d)}`, `δ_n = c_δ (ln n / n)^{1/(2γκ+d)}`,
/// `τ_n = c_τ (ℓ_n ln ln n / n)^{γ/(2γκ+d)}`, with `ℓ_n = ln n` for
/// bounded-support kernels (`σ_n = δ_n`) and `(ln n)³` otherwise
/// (`σ_n = c_δ ((ln n)³/n)^{1/(2γκ+d)}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConstants {
    pub c_eps: f64,
    pub c_delta: f64,
    pub c_tau: f64,
    /// Separation exponent; taken from the instance when absent.
    pub kappa: Option<f64>,
    /// `K̲` of the two-sided rate: the share of runs with `ρ_error ≥ ε_n / K̲` is reported.
    pub k_lower: f64,
}

impl Default for RateConstants {
    fn default() -> Self {
        Self {
            c_eps: 0.2,
            c_delta: 0.5,
            c_tau: 1.0,
            kappa: None,
            k_lower: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandwichOptions {
    /// Number of levels `ρ_j = j ‖h‖∞ / (levels + 1)`.
    pub levels: usize,
    /// Grid spacing; `min(σ, δ)/4` when absent.
    pub spacing: Option<f64>,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        Self {
            levels: 8,
            spacing: None,
        }
    }
}

/// An experiment description, usually read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub instance: InstanceSpec,
    pub n_list: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_kernel")]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    /// Bandwidth of the cluster and sandwich modes.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Bandwidths of the uncertainty mode.
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub adaptive: AdaptiveOptions,
    #[serde(default)]
    pub rates: RateConstants,
    #[serde(default)]
    pub sandwich: SandwichOptions,
    /// Grid spacing of the cluster-recovery metric; `min(σ, δ)/4` when absent.
    #[serde(default)]
    pub metric_spacing: Option<f64>,
    /// Destination of the result JSON; the per-run CSV goes next to it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub record_runtime: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must not be empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        let needs_delta = matches!(self.mode, Mode::Cluster | Mode::Sandwich);
        if needs_delta && self.delta.is_none() {
            return Err(Error::Config("missing field `delta`".into()));
        }
        if self.mode == Mode::Uncertainty && self.deltas.is_empty() && self.delta.is_none() {
            return Err(Error::Config("missing field `deltas`".into()));
        }
        Ok(())
    }

    fn uncertainty_deltas(&self) -> Vec<f64> {
        if self.deltas.is_empty() {
            self.delta.into_iter().collect()
        } else {
            self.deltas.clone()
        }
    }
}

/// SplitMix64 finaliser, used to derive per-run seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample seed of the run `(n, seed, δ index)`.
pub fn run_seed(master: u64, n: usize, seed: u64, delta_index: usize) -> u64 {
    [n as u64, seed, delta_index as u64]
        .into_iter()
        .fold(mix(master), |acc, v| mix(acc ^ v))
}

/// One row of the long-form report. Fields a mode does not measure stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub seed: u64,
    pub delta_index: usize,
    pub delta: f64,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
    pub rho0: Option<f64>,
    pub rho_out: Option<f64>,
    pub split: Option<bool>,
    pub components: Option<usize>,
    /// `ρ_out − ρ*`; empty when the instance has no split or none was found.
    pub rho_error: Option<f64>,
    /// `min over matchings Σ μ(B_i △ A*_i)`.
    pub symdiff_total: Option<f64>,
    pub sup_distance: Option<f64>,
    pub sandwich_levels: Option<usize>,
    pub raw_violations: Option<usize>,
    pub interior_violations: Option<usize>,
    pub grid_size: Option<usize>,
    /// Adaptive mode: `min_δ ((τ_δ/c_sep)^κ + 6ε_δ)`.
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    /// Adaptive mode: `ε_{D,Δ} < ρ*_{D,Δ} − ρ*`.
    pub lower_ok: Option<bool>,
    /// Adaptive mode: the selected level equals the minimum over bandwidths.
    pub min_matches: Option<bool>,
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub n: usize,
    pub seed: u64,
    pub delta_index: usize,
    pub reason: String,
}

/// Summary over seeds for one `(n, δ index)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub n: usize,
    pub delta_index: usize,
    pub delta: f64,
    pub runs: usize,
    pub split_fraction: Option<f64>,
    /// Runs without a split count as `+∞` for bimodal instances.
    pub median_rho_error: Option<f64>,
    pub median_symdiff: Option<f64>,
    pub median_sup_distance: Option<f64>,
    pub clean_fraction: Option<f64>,
    pub within_bound_fraction: Option<f64>,
    pub lower_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub config: ExperimentConfig,
    /// Every parameter set used, with the source of each value.
    pub params: Vec<ParameterSet>,
    pub records: Vec<RunRecord>,
    pub skips: Vec<Skip>,
    pub aggregates: Vec<Aggregate>,
    pub regressions: BTreeMap<String, Regression>,
    pub checks: BTreeMap<String, bool>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    match config.mode {
        Mode::Cluster => run_cluster(config),
        Mode::Adaptive => run_adaptive(config),
        Mode::Rates => run_rates(config),
        Mode::Uncertainty => run_uncertainty(config),
        Mode::Sandwich => run_sandwich(config),
    }
}

struct Job {
    n: usize,
    seed: u64,
    delta_index: usize,
    delta: f64,
}

type JobOutcome = std::result::Result<(RunRecord, Option<ParameterSet>), Skip>;

fn jobs(config: &ExperimentConfig, deltas: &[f64]) -> Vec<Job> {
    let mut out = Vec::new();
    for &n in &config.n_list {
        for (delta_index, &delta) in deltas.iter().enumerate() {
            for &seed in &config.seeds {
                out.push(Job {
                    n,
                    seed,
                    delta_index,
                    delta,
                });
            }
        }
    }
    out
}

fn execute<F>(config: &ExperimentConfig, jobs: Vec<Job>, f: F) -> (Vec<RunRecord>, Vec<ParameterSet>, Vec<Skip>)
where
    F: Fn(&Job, &Dataset) -> Result<(RunRecord, Option<ParameterSet>)> + Sync,
{
    let truth = config.instance.build();
    let outcomes: Vec<JobOutcome> = jobs
        .par_iter()
        .map(|job| {
            let started = Instant::now();
            let result = truth.as_ref().map_err(|e| Error::GroundTruth(e.to_string())).and_then(|t| {
                let data = t.sample(job.n, run_seed(config.master_seed, job.n, job.seed, job.delta_index))?;
                f(job, &data)
            });
            match result {
                Ok((mut record, params)) => {
                    record.n = job.n;
                    record.seed = job.seed;
                    record.delta_index = job.delta_index;
                    if config.record_runtime {
                        record.runtime_ms = Some(started.elapsed().as_secs_f64() * 1e3);
                    }
                    Ok((record, params))
                }
                Err(e) => Err(Skip {
                    n: job.n,
                    seed: job.seed,
                    delta_index: job.delta_index,
                    reason: e.to_string(),
                }),
            }
        })
        .collect();
    let mut records = Vec::new();
    let mut params: Vec<ParameterSet> = Vec::new();
    let mut skips = Vec::new();
    for o in outcomes {
        match o {
            Ok((r, p)) => {
                if let Some(p) = p {
                    // Compared through JSON so NaN placeholders dedupe too.
                    let key = serde_json::to_string(&p).unwrap_or_default();
                    if !params.iter().any(|q| serde_json::to_string(q).unwrap_or_default() == key) {
                        params.push(p);
                    }
                }
                records.push(r);
            }
            Err(s) => skips.push(s),
        }
    }
    (records, params, skips)
}

fn finish(
    config: &ExperimentConfig,
    truth: &GroundTruthDensity,
    records: Vec<RunRecord>,
    params: Vec<ParameterSet>,
    skips: Vec<Skip>,
) -> ExperimentReport {
    let aggregates = aggregate(&records, truth.is_bimodal(), config.rates.k_lower);
    ExperimentReport {
        mode: config.mode,
        config: config.clone(),
        params,
        records,
        skips,
        aggregates,
        regressions: BTreeMap::new(),
        checks: BTreeMap::new(),
    }
}

fn fraction(values: impl Iterator<Item = bool>) -> Option<f64> {
    let (mut hits, mut total) = (0usize, 0usize);
    for v in values {
        total += 1;
        hits += v as usize;
    }
    (total > 0).then(|| hits as f64 / total as f64)
}

fn median_of(values: Vec<f64>) -> Option<f64> {
    (!values.is_empty()).then(|| median(&values))
}

/// Per-cell summaries, recomputable from the records alone.
pub fn aggregate(records: &[RunRecord], bimodal: bool, k_lower: f64) -> Vec<Aggregate> {
    let mut cells: BTreeMap<(usize, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        cells.entry((r.n, r.delta_index)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|((n, delta_index), rs)| {
            let rho_errors: Vec<f64> = if bimodal && rs.iter().any(|r| r.split.is_some()) {
                rs.iter().map(|r| r.rho_error.unwrap_or(f64::INFINITY)).collect()
            } else {
                Vec::new()
            };
            Aggregate {
                n,
                delta_index,
                delta: rs[0].delta,
                runs: rs.len(),
                split_fraction: fraction(rs.iter().filter_map(|r| r.split)),
                median_rho_error: median_of(rho_errors),
                median_symdiff: median_of(rs.iter().filter_map(|r| r.symdiff_total).collect()),
                median_sup_distance: median_of(rs.iter().filter_map(|r| r.sup_distance).collect()),
                clean_fraction: fraction(rs.iter().filter_map(|r| r.interior_violations.map(|v| v == 0))),
                within_bound_fraction: fraction(rs.iter().filter_map(|r| r.within_bound)),
                lower_fraction: bimodal
                    .then(|| {
                        fraction(rs.iter().filter_map(|r| match (r.split, r.epsilon) {
                            (Some(_), Some(eps)) => Some(r.rho_error.is_some_and(|e| e >= eps / k_lower)),
                            _ => None,
                        }))
                    })
                    .flatten(),
            }
        })
        .collect()
}

/// Log-log regression of a positive, finite per-`n` statistic.
fn loglog(points: &[(f64, f64)]) -> Option<Regression> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(ols(&x, &y))
}

/// Clusters returned by a split, as σ-ball unions, compared with the true
/// clusters on a grid; the smaller total over the two matchings is returned.
pub fn cluster_symdiff(
    truth: &GroundTruthDensity,
    data: &Dataset,
    output: &ClusterOutput,
    sigma: f64,
    norm: NormKind,
    spacing: f64,
) -> Result<Option<f64>> {
    if !output.split || !truth.is_bimodal() {
        return Ok(None);
    }
    let mut comps: Vec<&Vec<usize>> = output.components.iter().collect();
    // Largest two if the split produced more than two pieces.
    comps.sort_by(|a, b| b.len().cmp(&a.len()));
    let region = truth.support().expanded(sigma + 2.0 * spacing);
    let spec = grid_within_budget(&region, spacing)?;
    let est: Vec<GridSet> = comps[..2]
        .iter()
        .map(|c| {
            let balls = BallUnion::new(data, c, sigma, norm);
            GridSet::from_predicate(spec.clone(), |x| balls.contains(x))
        })
        .collect();
    let truth_sets: Vec<GridSet> = [1u8, 2]
        .iter()
        .map(|&i| GridSet::from_predicate(spec.clone(), |x| truth.in_true_cluster(i, x)))
        .collect();
    let straight = est[0].symdiff_measure(&truth_sets[0])? + est[1].symdiff_measure(&truth_sets[1])?;
    let crossed = est[0].symdiff_measure(&truth_sets[1])? + est[1].symdiff_measure(&truth_sets[0])?;
    Ok(Some(straight.min(crossed)))
}

/// Grid covering `region` at `spacing`, coarsened until it fits the node budget.
fn grid_within_budget(region: &crate::density::BoxRegion, spacing: f64) -> Result<GridSpec> {
    let mut h = spacing;
    loop {
        let nodes: f64 = region.lo.iter().zip(&region.hi).map(|(a, b)| ((b - a) / h).ceil() + 1.0).product();
        if nodes <= MAX_GRID_NODES as f64 {
            return GridSpec::covering(region, h);
        }
        h *= 1.25;
    }
}

fn cluster_record(
    truth: &GroundTruthDensity,
    data: &Dataset,
    kernel: &Kernel,
    params: &ParameterSet,
    config: &ExperimentConfig,
) -> Result<RunRecord> {
    let family = KdeLevelFamily::new(data, kernel, params.delta, params.sigma)?;
    let out = run_kde(&family, &params.splitter(), config.schedule.edge_rule)?;
    let spacing = config.metric_spacing.unwrap_or(params.sigma.min(params.delta) / 4.0);
    let symdiff = cluster_symdiff(truth, data, &out, params.sigma, kernel.norm, spacing)?;
    Ok(RunRecord {
        delta: params.delta,
        sigma: Some(params.sigma),
        epsilon: Some(params.epsilon),
        tau: Some(params.tau),
        rho0: Some(params.rho0),
        rho_out: Some(out.rho_out),
        split: Some(out.split),
        components: Some(out.components.len()),
        rho_error: truth.rho_star.filter(|_| out.split).map(|rs| out.rho_out - rs),
        symdiff_total: symdiff,
        ..Default::default()
    })
}

/// Full pipeline at a fixed bandwidth: sample, KDE, level-set family,
/// splitter, metrics against the ground truth.
pub fn run_cluster(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let truth = config.instance.build()?;
    let kernel = config.kernel.build(truth.dim())?;
    let delta = config.delta.ok_or_else(|| Error::Config("missing field `delta`".into()))?;
    let (records, params, skips) = execute(config, jobs(config, &[delta]), |job, data| {
        let params = ParameterSet::from_schedule(job.delta, job.n, 1, &kernel, &config.schedule)?;
        let record = cluster_record(&truth, data, &kernel, &params, config)?;
        Ok((record, Some(params)))
    });
    let mut report = finish(config, &truth, records, params, skips);
    report
        .checks
        .insert("all_runs_completed".into(), report.skips.is_empty());
    Ok(report)
}

/// Rate-schedule parameters at sample size `n`.
pub fn rate_parameters(
    n: usize,
    kernel: &Kernel,
    gamma: f64,
    kappa: f64,
    rates: &RateConstants,
) -> Result<ParameterSet> {
    if n < 16 {
        return Err(Error::param("n", "must be at least 16"));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param("kappa", "rate schedules need a finite separation exponent"));
    }
    let nf = n as f64;
    let d = kernel.dim as f64;
    let denom = 2.0 * gamma * kappa + d;
    let (l, ll) = (nf.ln(), nf.ln().ln());
    let log_factor = if kernel.bounded_support() { l } else { l.powi(3) };
    let delta = rates.c_delta * (l / nf).powf(1.0 / denom);
    let sigma = if kernel.bounded_support() {
        delta
    } else {
        rates.c_delta * (log_factor / nf).powf(1.0 / denom)
    };
    let epsilon = rates.c_eps * (log_factor * ll / nf).powf(gamma * kappa / denom);
    let tau = rates.c_tau * (log_factor * ll / nf).powf(gamma / denom);
    let mut provenance = BTreeMap::new();
    for (k, v) in [
        ("delta", "rate: c_delta (ln n / n)^(1/(2 gamma kappa + d))"),
        ("sigma", if kernel.bounded_support() { "rate: sigma = delta" } else { "rate: c_delta ((ln n)^3 / n)^(1/(2 gamma kappa + d))" }),
        ("epsilon", "rate: c_eps (l_n ln ln n / n)^(gamma kappa/(2 gamma kappa + d))"),
        ("tau", "rate: c_tau (l_n ln ln n / n)^(gamma/(2 gamma kappa + d))"),
        ("rho0", "rate: rho0 = epsilon"),
    ] {
        provenance.insert(k.to_string(), v.to_string());
    }
    let set = ParameterSet {
        delta,
        sigma,
        epsilon,
        tau,
        rho0: epsilon,
        varsigma: f64::NAN,
        c_u: f64::NAN,
        provenance,
    };
    set.validate()?;
    Ok(set)
}

/// Sweeps `n` with the rate schedules and regresses the median split-level
/// error and cluster error on `n` in log-log scale.
pub fn run_rates(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let truth = config.instance.build()?;
    let kernel = config.kernel.build(truth.dim())?;
    let kappa = config
        .rates
        .kappa
        .or(truth.metadata.kappa)
        .ok_or_else(|| Error::Config("rates need `rates.kappa` or an instance with known κ".into()))?;
    let gamma = config.schedule.gamma;
    let (records, params, skips) = execute(config, jobs(config, &[f64::NAN]), |job, data| {
        let params = rate_parameters(job.n, &kernel, gamma, kappa, &config.rates)?;
        let record = cluster_record(&truth, data, &kernel, &params, config)?;
        Ok((record, Some(params)))
    });
    let mut report = finish(config, &truth, records, params, skips);
    for r in &mut report.aggregates {
        r.delta = f64::NAN;
    }
    let rho: Vec<(f64, f64)> = report
        .aggregates
        .iter()
        .filter_map(|a| a.median_rho_error.map(|m| (a.n as f64, m)))
        .collect();
    if let Some(reg) = loglog(&rho) {
        report.regressions.insert("rho_error_vs_n".into(), reg);
    }
    let sym: Vec<(f64, f64)> = report
        .aggregates
        .iter()
        .filter_map(|a| a.median_symdiff.map(|m| (a.n as f64, m)))
        .collect();
    if let Some(reg) = loglog(&sym) {
        report.regressions.insert("symdiff_vs_n".into(), reg);
    }
    let monotone = sym.windows(2).all(|w| w[1].1 <= w[0].1);
    report.checks.insert("symdiff_monotone_in_n".into(), monotone);
    Ok(report)
}

/// Sweeps `(n, δ)` and measures `‖h_{D,δ} − h_{P,δ}‖∞` on a probe grid.
pub fn run_uncertainty(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let truth = config.instance.build()?;
    let kernel = config.kernel.build(truth.dim())?;
    let deltas = config.uncertainty_deltas();
    let references: Vec<SmoothedReference> = deltas
        .iter()
        .map(|&d| SmoothedReference::new(&truth, &kernel, d, ProbeGrid::for_truth(&truth, &kernel, d)?))
        .collect::<Result<_>>()?;
    let (records, params, skips) = execute(config, jobs(config, &deltas), |job, data| {
        let value = references[job.delta_index].sup_distance(data, &kernel);
        Ok((
            RunRecord {
                delta: job.delta,
                sup_distance: Some(value),
                ..Default::default()
            },
            None,
        ))
    });
    let mut report = finish(config, &truth, records, params, skips);
    for (j, &d) in deltas.iter().enumerate() {
        let pts: Vec<(f64, f64)> = report
            .aggregates
            .iter()
            .filter(|a| a.delta_index == j)
            .filter_map(|a| a.median_sup_distance.map(|m| (a.n as f64, m)))
            .collect();
        if let Some(reg) = loglog(&pts) {
            report.regressions.insert(format!("sup_distance_vs_n[delta={d}]"), reg);
        }
    }
    if let Some(&n_max) = config.n_list.iter().max() {
        let mut pts: Vec<(f64, f64)> = report
            .aggregates
            .iter()
            .filter(|a| a.n == n_max)
            .filter_map(|a| a.median_sup_distance.map(|m| (a.delta, m)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.len() >= 2 {
            let decreasing = pts.windows(2).all(|w| w[1].1 <= w[0].1);
            report.checks.insert("error_grows_as_delta_shrinks".into(), decreasing);
        }
        if let Some(reg) = loglog(&pts) {
            report.regressions.insert(format!("sup_distance_vs_delta[n={n_max}]"), reg);
        }
    }
    Ok(report)
}

/// Sandwich inclusion check across a level grid, with the vertical error
/// measured per run as the larger of the probe-grid and at-sample sup distances.
pub fn run_sandwich(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let truth = config.instance.build()?;
    let kernel = config.kernel.build(truth.dim())?;
    let delta = config.delta.ok_or_else(|| Error::Config("missing field `delta`".into()))?;
    let sigma = config.schedule.sigma.map_or_else(|| sigma_schedule(delta, &kernel), Ok)?;
    let reference = SmoothedReference::new(&truth, &kernel, delta, ProbeGrid::for_truth(&truth, &kernel, delta)?)?;
    let spacing = config.sandwich.spacing.unwrap_or(sigma.min(delta) / 4.0);
    let region = truth.support().expanded(2.0 * sigma + 4.0 * spacing);
    let spec = grid_within_budget(&region, spacing)?;
    let h_sup = truth.sup_norm();
    let levels: Vec<f64> = (1..=config.sandwich.levels)
        .map(|j| h_sup * j as f64 / (config.sandwich.levels + 1) as f64)
        .collect();
    let (records, params, skips) = execute(config, jobs(config, &[delta]), |_job, data| {
        let family = KdeLevelFamily::new(data, &kernel, delta, sigma)?;
        let at_samples = sup_distance_at_samples(data, &truth, &kernel, delta, family.values())?;
        let eps = reference.sup_distance(data, &kernel).max(at_samples);
        let (mut raw, mut interior) = (0, 0);
        for &rho in &levels {
            let rep = check_sandwich(&family.estimate(rho), &truth, &kernel, delta, eps, &spec)?;
            raw += rep.lower_violations + rep.upper_violations;
            interior += rep.interior_lower_violations + rep.interior_upper_violations;
        }
        Ok((
            RunRecord {
                delta,
                sigma: Some(sigma),
                epsilon: Some(eps),
                sup_distance: Some(eps),
                sandwich_levels: Some(levels.len()),
                raw_violations: Some(raw),
                interior_violations: Some(interior),
                ..Default::default()
            },
            None,
        ))
    });
    let mut report = finish(config, &truth, records, params, skips);
    let clean = report.records.iter().all(|r| r.interior_violations == Some(0));
    report.checks.insert("zero_interior_violations".into(), clean);
    Ok(report)
}

/// `(τ/c_sep)^κ`, with the `κ = ∞` convention `0` below `c_sep` and `∞` above.
pub fn separation_term(tau: f64, c_sep: f64, kappa: f64) -> f64 {
    let ratio = tau / c_sep;
    if kappa.is_infinite() {
        if ratio < 1.0 {
            0.0
        } else if ratio == 1.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        ratio.powf(kappa)
    }
}

/// Whether bandwidth `delta` meets the premises of the adaptive guarantee
/// on `truth` when the set has `grid_size` members.
pub fn admissible_bandwidth(
    truth: &GroundTruthDensity,
    kernel: &Kernel,
    delta: f64,
    n: usize,
    grid_size: usize,
    cfg: &ScheduleConfig,
) -> Result<bool> {
    let meta = &truth.metadata;
    let (Some(rs), Some(rss), Some(kappa), Some(c_sep)) =
        (truth.rho_star, truth.rho_star_star, meta.kappa, meta.c_sep_lower)
    else {
        return Err(Error::GroundTruth(format!("{} has no separation metadata", truth.name)));
    };
    let sigma = sigma_schedule(delta, kernel)?;
    let eps = epsilon_schedule(
        &EpsilonInputs {
            delta,
            n,
            varsigma: cfg.varsigma,
            grid_size,
            c_u: cfg.c_u,
        },
        kernel,
    )?;
    let tau = tau_fixed(sigma, cfg.gamma, cfg.c_thick, cfg.margin, cfg.psi_multiple);
    Ok(2.0 * sigma <= meta.delta_thick && eps + separation_term(tau, c_sep, kappa) <= (rss - rs) / 9.0)
}

/// The bandwidth set of one adaptive run.
pub fn adaptive_grid(
    truth: &GroundTruthDensity,
    kernel: &Kernel,
    n: usize,
    options: &AdaptiveOptions,
    cfg: &ScheduleConfig,
) -> Result<BandwidthGrid> {
    let mut grid = if options.deltas.is_empty() {
        bandwidth_grid(n, truth.dim())?
    } else {
        BandwidthGrid::from_list(options.deltas.clone(), n)?
    };
    if options.admissible_only {
        // ε grows with |Δ|, so a bandwidth admissible for a set of `size`
        // members stays admissible for the (at most `size`) thinned set.
        let size = match options.max_grid {
            0 => grid.len(),
            m => m.min(grid.len()),
        };
        let mut keep = Vec::new();
        for &d in &grid.deltas {
            if admissible_bandwidth(truth, kernel, d, n, size, cfg)? {
                keep.push(d);
            }
        }
        if keep.is_empty() {
            return Err(Error::Config(format!(
                "no bandwidth of the grid meets the adaptive premises at n = {n}"
            )));
        }
        grid = BandwidthGrid { deltas: keep, ..grid };
    }
    Ok(grid.thinned(options.max_grid))
}

/// Adaptive bandwidth selection per `(n, seed)`, with the selected level
/// compared with the guarantee's envelope.
pub fn run_adaptive(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let truth = config.instance.build()?;
    let kernel = config.kernel.build(truth.dim())?;
    let (records, params, skips) = execute(config, jobs(config, &[f64::NAN]), |job, data| {
        let grid = adaptive_grid(&truth, &kernel, job.n, &config.adaptive, &config.schedule)?;
        let result = adaptive_select(data, &kernel, &grid, &config.schedule)?;
        let minimum = result
            .per_delta
            .iter()
            .filter_map(|p| p.output.as_ref().map(|o| o.rho_out))
            .fold(f64::INFINITY, f64::min);
        let meta = &truth.metadata;
        let bound = match (meta.kappa, meta.c_sep_lower) {
            (Some(kappa), Some(c_sep)) => Some(
                result
                    .per_delta
                    .iter()
                    .filter_map(|p| p.params.as_ref())
                    .map(|p| separation_term(p.tau, c_sep, kappa) + 6.0 * p.epsilon)
                    .fold(f64::INFINITY, f64::min),
            ),
            _ => None,
        };
        let sel = &result.selected_params;
        let rho_error = truth.rho_star.map(|rs| result.rho_star - rs);
        let symdiff = cluster_symdiff(
            &truth,
            data,
            &result.selected,
            sel.sigma,
            kernel.norm,
            config.metric_spacing.unwrap_or(sel.sigma.min(sel.delta) / 4.0),
        )?;
        Ok((
            RunRecord {
                delta: result.delta_star,
                sigma: Some(sel.sigma),
                epsilon: Some(sel.epsilon),
                tau: Some(sel.tau),
                rho0: Some(sel.rho0),
                rho_out: Some(result.rho_star),
                split: Some(result.selected.split),
                components: Some(result.selected.components.len()),
                rho_error,
                symdiff_total: symdiff,
                grid_size: Some(result.grid_size),
                bound,
                within_bound: bound.zip(rho_error).map(|(b, e)| e <= b),
                lower_ok: rho_error.map(|e| sel.epsilon < e),
                min_matches: Some(minimum == result.rho_star),
                ..Default::default()
            },
            Some(sel.clone()),
        ))
    });
    let mut report = finish(config, &truth, records, params, skips);
    let structural = report.records.iter().all(|r| r.min_matches == Some(true));
    report.checks.insert("selection_is_minimum".into(), structural);
    Ok(report)
}

/// Splitter on a user dataset with explicit or scheduled parameters.
pub fn cluster_dataset(
    data: &Dataset,
    kernel: &Kernel,
    params: &ParameterSet,
    rule: crate::connectivity::EdgeRule,
) -> Result<ClusterOutput> {
    let family = KdeLevelFamily::new(data, kernel, params.delta, params.sigma)?;
    run_kde(&family, &params.splitter(), rule)
}
