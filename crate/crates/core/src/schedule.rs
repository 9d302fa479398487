//! Parameter schedules `σ(δ)`, `ε(δ, n, ς)`, `τ(σ)`, the bandwidth grid, and
//! adaptive bandwidth selection.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectivity::EdgeRule;
use crate::density::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{euclidean_ball_volume, Kernel};
use crate::levelset::KdeLevelFamily;
use crate::splitter::{run_kde, ClusterOutput, SplitterParams};

/// `e^{e^e}` rounded up: the smallest `n` with `ln ln ln n ≥ 1`.
pub const ADAPTIVE_TAU_MIN_N: u64 = 3_814_280;

/// `σ = δ` for bounded-support kernels, otherwise `σ = δ |ln δ|²`.
pub fn sigma_schedule(delta: f64, kernel: &Kernel) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    if kernel.bounded_support() {
        return Ok(delta);
    }
    if delta > (-1.0f64).exp() {
        return Err(Error::param(
            "delta",
            format!("{delta} exceeds 1/e; the unbounded-kernel schedule would give σ < δ"),
        ));
    }
    let l = delta.ln().abs();
    Ok(delta * l * l)
}

/// Inputs of the level-step schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonInputs {
    pub delta: f64,
    pub n: usize,
    pub varsigma: f64,
    pub grid_size: usize,
    pub c_u: f64,
}

/// The statistical term `C_u √(|ln δ| (ς + ln|Δ|) ln ln n / (δ^d n))`.
pub fn epsilon_main_term(inputs: &EpsilonInputs, dim: usize) -> Result<f64> {
    let EpsilonInputs {
        delta,
        n,
        varsigma,
        grid_size,
        c_u,
    } = *inputs;
    if n < 16 {
        return Err(Error::param("n", "must be at least 16 so that ln ln n > 0"));
    }
    if !(delta > 0.0 && delta <= (-1.0f64).exp()) {
        return Err(Error::param("delta", format!("{delta} is outside (0, 1/e]")));
    }
    if !(varsigma >= 1.0) {
        return Err(Error::param("varsigma", "must be at least 1"));
    }
    if grid_size == 0 {
        return Err(Error::param("grid_size", "must be at least 1"));
    }
    if !(c_u > 0.0) {
        return Err(Error::param("c_u", "must be positive"));
    }
    let nf = n as f64;
    let radicand =
        delta.ln().abs() * (varsigma + (grid_size as f64).ln()) * nf.ln().ln() / (delta.powi(dim as i32) * nf);
    Ok(c_u * radicand.sqrt())
}

/// The kernel-tail term `max{1, 2d²V_d} c δ^{|ln δ| − d}`; zero for
/// bounded-support kernels.
pub fn epsilon_tail_term(delta: f64, kernel: &Kernel) -> f64 {
    if kernel.bounded_support() {
        return 0.0;
    }
    let d = kernel.dim as f64;
    let factor = (2.0 * d * d * euclidean_ball_volume(kernel.dim)).max(1.0);
    factor * kernel.exp_tail_constant * delta.powf(delta.ln().abs() - d)
}

pub fn epsilon_schedule(inputs: &EpsilonInputs, kernel: &Kernel) -> Result<f64> {
    Ok(epsilon_main_term(inputs, kernel.dim)? + epsilon_tail_term(inputs.delta, kernel))
}

/// `ψ(δ) = 3 c_thick δ^γ`.
pub fn thickness_function(delta: f64, gamma: f64, c_thick: f64) -> f64 {
    3.0 * c_thick * delta.powf(gamma)
}

/// `τ = multiple · ψ(2σ) · (1 + margin)`: strictly above `ψ(2σ)` for
/// single runs (`multiple = 1`), at least `2ψ(2σ)` for adaptive runs.
pub fn tau_fixed(sigma: f64, gamma: f64, c_thick: f64, margin: f64, multiple: f64) -> f64 {
    multiple * thickness_function(2.0 * sigma, gamma, c_thick) * (1.0 + margin)
}

/// `τ = σ^γ ln ln ln n`, available once `ln ln ln n ≥ 1`.
pub fn tau_adaptive(sigma: f64, gamma: f64, n: u64) -> Result<f64> {
    if n < ADAPTIVE_TAU_MIN_N {
        return Err(Error::param(
            "n",
            format!(
                "adaptive τ needs n ≥ {ADAPTIVE_TAU_MIN_N} (ln ln ln n ≥ 1); got {n}; use the fixed τ mode"
            ),
        ));
    }
    Ok(sigma.powf(gamma) * (n as f64).ln().ln().ln())
}

/// `δ^{|ln δ|} |ln δ|^{2d−2} ≤ δ^{|ln δ|−d}`, compared in log space.
pub fn delta_inequality_holds(delta: f64, dim: usize) -> bool {
    let l = delta.ln().abs();
    let d = dim as f64;
    let lhs = l * delta.ln() + (2.0 * d - 2.0) * l.ln();
    let rhs = (l - d) * delta.ln();
    lhs <= rhs + 1e-12 * rhs.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauMode {
    #[default]
    Fixed,
    Adaptive,
}

/// Knobs of the schedules; the structural constants `γ`, `c_thick` are
/// properties of the unknown distribution and must be supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub c_u: f64,
    pub varsigma: f64,
    pub gamma: f64,
    pub c_thick: f64,
    pub margin: f64,
    /// `τ ≥ multiple · ψ(2σ)`; the adaptive selection needs 2.
    pub psi_multiple: f64,
    pub tau_mode: TauMode,
    pub edge_rule: EdgeRule,
    /// Manual overrides.
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
    pub rho0: Option<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            c_u: 1.0,
            varsigma: 1.0,
            gamma: 1.0,
            c_thick: 1.0,
            margin: 0.1,
            psi_multiple: 1.0,
            tau_mode: TauMode::Fixed,
            edge_rule: EdgeRule::Standard,
            sigma: None,
            epsilon: None,
            tau: None,
            rho0: None,
        }
    }
}

/// Parameters of one splitter run with the source of every value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub delta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub rho0: f64,
    pub varsigma: f64,
    pub c_u: f64,
    pub provenance: BTreeMap<String, String>,
}

impl ParameterSet {
    pub fn from_schedule(delta: f64, n: usize, grid_size: usize, kernel: &Kernel, cfg: &ScheduleConfig) -> Result<Self> {
        let mut provenance = BTreeMap::new();
        let mut note = |k: &str, v: &str| {
            provenance.insert(k.to_string(), v.to_string());
        };
        note("delta", "input");
        let sigma = match cfg.sigma {
            Some(s) => {
                note("sigma", "manual");
                s
            }
            None => {
                note(
                    "sigma",
                    if kernel.bounded_support() {
                        "schedule: sigma = delta"
                    } else {
                        "schedule: sigma = delta |ln delta|^2"
                    },
                );
                sigma_schedule(delta, kernel)?
            }
        };
        let epsilon = match cfg.epsilon {
            Some(e) => {
                note("epsilon", "manual");
                e
            }
            None => {
                note(
                    "epsilon",
                    if kernel.bounded_support() {
                        "schedule: C_u sqrt(|ln delta| (varsigma + ln|grid|) ln ln n / (delta^d n))"
                    } else {
                        "schedule: C_u sqrt(|ln delta| (varsigma + ln|grid|) ln ln n / (delta^d n)) + tail term"
                    },
                );
                let inputs = EpsilonInputs {
                    delta,
                    n,
                    varsigma: cfg.varsigma,
                    grid_size,
                    c_u: cfg.c_u,
                };
                epsilon_schedule(&inputs, kernel)?
            }
        };
        let tau = match (cfg.tau, cfg.tau_mode) {
            (Some(t), _) => {
                note("tau", "manual");
                t
            }
            (None, TauMode::Fixed) => {
                note("tau", "schedule: multiple * 3 c_thick (2 sigma)^gamma (1 + margin)");
                tau_fixed(sigma, cfg.gamma, cfg.c_thick, cfg.margin, cfg.psi_multiple)
            }
            (None, TauMode::Adaptive) => {
                note("tau", "schedule: sigma^gamma ln ln ln n");
                tau_adaptive(sigma, cfg.gamma, n as u64)?
            }
        };
        let rho0 = match cfg.rho0 {
            Some(r) => {
                note("rho0", "manual");
                r
            }
            None => {
                note("rho0", "schedule: rho0 = epsilon");
                epsilon
            }
        };
        let set = Self {
            delta,
            sigma,
            epsilon,
            tau,
            rho0,
            varsigma: cfg.varsigma,
            c_u: cfg.c_u,
            provenance,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta),
            ("sigma", self.sigma),
            ("epsilon", self.epsilon),
            ("tau", self.tau),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if !(self.rho0 >= 0.0) {
            return Err(Error::param("rho0", "must be non-negative"));
        }
        Ok(())
    }

    pub fn splitter(&self) -> SplitterParams {
        SplitterParams::new(self.tau, self.epsilon, self.rho0)
    }
}

/// Finite set of candidate bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrid {
    pub deltas: Vec<f64>,
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub spacing: f64,
}

/// Endpoints of `I_n = [(ln n (ln ln n)²/n)^{1/d}, (1/ln ln n)^{1/d}]`.
pub fn bandwidth_interval(n: usize, dim: usize) -> Result<(f64, f64)> {
    if n < 16 {
        return Err(Error::param("n", "must be at least 16"));
    }
    let nf = n as f64;
    let (l, ll) = (nf.ln(), nf.ln().ln());
    let inv_d = 1.0 / dim as f64;
    Ok(((l * ll * ll / nf).powf(inv_d), (1.0 / ll).powf(inv_d)))
}

/// Arithmetic `n^{-1/d}`-net of `I_n ∩ (0, 1/e]` starting at the lower endpoint.
pub fn bandwidth_grid(n: usize, dim: usize) -> Result<BandwidthGrid> {
    let (lower, raw_upper) = bandwidth_interval(n, dim)?;
    let upper = raw_upper.min((-1.0f64).exp());
    if !(lower < upper) {
        return Err(Error::DegenerateInterval { lower, upper });
    }
    let spacing = (n as f64).powf(-1.0 / dim as f64);
    let count = (((upper - lower) / spacing).floor() as usize + 1).min(n);
    let mut deltas: Vec<f64> = (0..count).map(|k| lower + k as f64 * spacing).collect();
    deltas.retain(|&d| d <= upper);
    deltas.dedup();
    Ok(BandwidthGrid {
        deltas,
        n,
        lower,
        upper,
        spacing,
    })
}

impl BandwidthGrid {
    /// An explicit list of bandwidths (sorted, deduplicated).
    pub fn from_list(mut deltas: Vec<f64>, n: usize) -> Result<Self> {
        deltas.sort_by(f64::total_cmp);
        deltas.dedup();
        if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d <= (-1.0f64).exp())) {
            return Err(Error::param("deltas", "must be a non-empty subset of (0, 1/e]"));
        }
        let (lower, upper) = (deltas[0], deltas[deltas.len() - 1]);
        Ok(Self {
            deltas,
            n,
            lower,
            upper,
            spacing: f64::NAN,
        })
    }

    /// Keeps at most `max` members, evenly spaced in index, always keeping both ends.
    pub fn thinned(&self, max: usize) -> Self {
        let len = self.deltas.len();
        if max == 0 || len <= max {
            return self.clone();
        }
        let mut deltas: Vec<f64> = (0..max)
            .map(|j| self.deltas[if max == 1 { 0 } else { j * (len - 1) / (max - 1) }])
            .collect();
        deltas.dedup();
        Self {
            deltas,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

/// Outcome for one bandwidth of the adaptive selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerDelta {
    pub delta: f64,
    pub params: Option<ParameterSet>,
    pub output: Option<ClusterOutput>,
    /// Reason the bandwidth was skipped.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub delta_star: f64,
    pub rho_star: f64,
    pub grid_size: usize,
    pub per_delta: Vec<PerDelta>,
    pub selected: ClusterOutput,
    pub selected_params: ParameterSet,
}

/// Runs the splitter for every bandwidth of `grid` (with `|Δ|` entering
/// `ε`) and keeps the smallest returned level, ties going to the smaller δ.
pub fn adaptive_select(data: &Dataset, kernel: &Kernel, grid: &BandwidthGrid, cfg: &ScheduleConfig) -> Result<AdaptiveResult> {
    let n = data.len();
    let size = grid.len();
    let per_delta: Vec<PerDelta> = grid
        .deltas
        .par_iter()
        .map(|&delta| {
            let attempt = || -> Result<(ParameterSet, ClusterOutput)> {
                let params = ParameterSet::from_schedule(delta, n, size, kernel, cfg)?;
                let family = KdeLevelFamily::new(data, kernel, delta, params.sigma)?;
                let out = run_kde(&family, &params.splitter(), cfg.edge_rule)?;
                Ok((params, out))
            };
            match attempt() {
                Ok((p, o)) => PerDelta {
                    delta,
                    params: Some(p),
                    output: Some(o),
                    skipped: None,
                },
                Err(e) => PerDelta {
                    delta,
                    params: None,
                    output: None,
                    skipped: Some(e.to_string()),
                },
            }
        })
        .collect();
    select_minimum(per_delta, size)
}

/// Selection rule on finished per-bandwidth runs.
pub fn select_minimum(per_delta: Vec<PerDelta>, grid_size: usize) -> Result<AdaptiveResult> {
    let mut best: Option<usize> = None;
    for (j, p) in per_delta.iter().enumerate() {
        let Some(out) = &p.output else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let cur = per_delta[b].output.as_ref().expect("selected output");
                out.rho_out < cur.rho_out || (out.rho_out == cur.rho_out && p.delta < per_delta[b].delta)
            }
        };
        if better {
            best = Some(j);
        }
    }
    let Some(b) = best else {
        let first = per_delta
            .iter()
            .find_map(|p| p.skipped.clone())
            .unwrap_or_else(|| "empty grid".to_string());
        return Err(Error::AllBandwidthsFailed(first));
    };
    let chosen = &per_delta[b];
    let selected = chosen.output.clone().expect("output");
    let selected_params = chosen.params.clone().expect("params");
    Ok(AdaptiveResult {
        delta_star: chosen.delta,
        rho_star: selected.rho_out,
        grid_size,
        selected,
        selected_params,
        per_delta,
    })
}
