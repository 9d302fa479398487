//! Ground-truth densities with known cluster structure, exact samplers, and
//! grid oracles for level sets, separation and structural constants.
//!
//! Shipped families:
//! - `two_plateaus`: two disjoint uniform plateaus (split at level 0, κ = ∞);
//! - `poly_valley`: two plateaus joined by a valley `ρ* + Δ(|x|/b)^p`, so the
//!   separation exponent is exactly `p`; optionally extruded to two dimensions;
//! - `bridged`: two plateaus joined by a flat bridge (split above 0, κ = ∞);
//! - `ball`, `bump`: unimodal densities with no split;
//! - `gauss_mixture`: two Gaussians, split level found by a grid scan.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{AnalyticDensity, BoxRegion, Dataset};
use crate::error::{Error, Result};
use crate::kernels::{euclidean_ball_volume, NormKind};
use crate::levelset::{level_set_grid, GridSet, GridSpec};
use crate::quad;

/// Structural constants of an instance. `None` marks quantities that are not
/// defined for it (e.g. separation for unimodal densities).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureMetadata {
    pub gamma: f64,
    pub c_thick: f64,
    pub delta_thick: f64,
    /// Separation exponent; `f64::INFINITY` when the clusters never touch.
    pub kappa: Option<f64>,
    pub c_sep_lower: Option<f64>,
    pub c_sep_upper: Option<f64>,
    /// Flatness exponent at `ρ*`.
    pub vartheta: Option<f64>,
    pub c_flat: Option<f64>,
    pub alpha: Option<f64>,
    pub c_bound: Option<f64>,
}

/// One of the shipped families with its parameters. In configuration files
/// this reads `{"name": "poly_valley", "p": 1.0, ...}`; omitted parameters
/// take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum InstanceSpec {
    TwoPlateaus(TwoPlateausParams),
    PolyValley(PolyValleyParams),
    Bridged(BridgedParams),
    Ball(BallParams),
    Bump(BallParams),
    GaussMixture(GaussMixtureParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPlateausParams {
    pub left: [f64; 2],
    pub right: [f64; 2],
    /// Relative heights before normalisation.
    pub heights: [f64; 2],
}

impl Default for TwoPlateausParams {
    fn default() -> Self {
        Self {
            left: [0.0, 0.5],
            right: [2.0, 2.5],
            heights: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolyValleyParams {
    pub dim: usize,
    /// Valley exponent, equal to the separation exponent κ.
    pub p: f64,
    /// Valley floor relative to the plateau height (before normalisation).
    pub floor: f64,
    /// Half-width of the valley.
    pub valley: f64,
    /// Width of each plateau.
    pub plateau: f64,
    /// Width of the outer linear ramps.
    pub ramp: f64,
    /// Extent of the second coordinate when `dim = 2`.
    pub depth: f64,
}

impl Default for PolyValleyParams {
    fn default() -> Self {
        Self {
            dim: 1,
            p: 1.0,
            floor: 0.3,
            valley: 0.6,
            plateau: 0.6,
            ramp: 0.3,
            depth: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgedParams {
    /// Bridge height relative to the plateau height.
    pub bridge: f64,
    /// Half-length of the bridge.
    pub half_gap: f64,
    pub plateau: f64,
}

impl Default for BridgedParams {
    fn default() -> Self {
        Self {
            bridge: 0.4,
            half_gap: 0.4,
            plateau: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallParams {
    pub dim: usize,
    pub radius: f64,
}

impl Default for BallParams {
    fn default() -> Self {
        Self { dim: 1, radius: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussMixtureParams {
    pub means: [f64; 2],
    pub sds: [f64; 2],
    pub weights: [f64; 2],
}

impl Default for GaussMixtureParams {
    fn default() -> Self {
        Self {
            means: [-1.0, 1.0],
            sds: [0.4, 0.4],
            weights: [0.5, 0.5],
        }
    }
}

impl InstanceSpec {
    pub fn build(&self) -> Result<GroundTruthDensity> {
        match self {
            InstanceSpec::TwoPlateaus(p) => two_plateaus(p),
            InstanceSpec::PolyValley(p) => poly_valley(p),
            InstanceSpec::Bridged(p) => bridged(p),
            InstanceSpec::Ball(p) => ball(p),
            InstanceSpec::Bump(p) => bump(p),
            InstanceSpec::GaussMixture(p) => gauss_mixture(p),
        }
    }

    /// Instance with default parameters, by registry name.
    pub fn by_name(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::json!({ "name": name }))
            .map_err(|e| Error::Config(format!("unknown instance `{name}`: {e}")))
    }

    pub const NAMES: [&'static str; 6] = ["two_plateaus", "poly_valley", "bridged", "ball", "bump", "gauss_mixture"];
}

/// Unnormalised one-dimensional profile.
#[derive(Debug, Clone, PartialEq)]
enum Profile1d {
    /// Piecewise constant: `(lo, hi, height)` pieces.
    Steps(Vec<(f64, f64, f64)>),
    Valley {
        p: f64,
        floor: f64,
        valley: f64,
        plateau: f64,
        ramp: f64,
    },
    Cosine { radius: f64 },
    Mixture { means: [f64; 2], sds: [f64; 2], weights: [f64; 2] },
}

impl Profile1d {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Profile1d::Steps(pieces) => pieces
                .iter()
                .find(|(a, b, _)| *a <= x && x <= *b)
                .map_or(0.0, |p| p.2),
            Profile1d::Valley {
                p,
                floor,
                valley,
                plateau,
                ramp,
            } => {
                let a = x.abs();
                if a <= *valley {
                    floor + (1.0 - floor) * (a / valley).powf(*p)
                } else if a <= valley + plateau {
                    1.0
                } else if a <= valley + plateau + ramp {
                    1.0 - (a - valley - plateau) / ramp
                } else {
                    0.0
                }
            }
            Profile1d::Cosine { radius } => {
                if x.abs() <= *radius {
                    0.5 * (1.0 + (std::f64::consts::PI * x / radius).cos())
                } else {
                    0.0
                }
            }
            Profile1d::Mixture { means, sds, weights } => (0..2)
                .map(|k| {
                    let z = (x - means[k]) / sds[k];
                    weights[k] * (-0.5 * z * z).exp() / (sds[k] * (2.0 * std::f64::consts::PI).sqrt())
                })
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// `h(x) = scale · g(x_1)` (times the indicator of `[0, depth]` for `x_2`).
    Line { g: Profile1d, depth: Option<f64> },
    /// Uniform on the Euclidean ball of the given radius.
    Ball { radius: f64 },
    /// Radial cosine bump.
    RadialBump { radius: f64 },
}

/// An analytic density with its cluster structure.
#[derive(Debug, Clone)]
pub struct GroundTruthDensity {
    pub name: String,
    pub spec: InstanceSpec,
    dim: usize,
    shape: Shape,
    scale: f64,
    support: BoxRegion,
    h_sup: f64,
    breaks: Vec<Vec<f64>>,
    /// First split level; `None` for unimodal instances.
    pub rho_star: Option<f64>,
    pub rho_star_star: Option<f64>,
    /// Level below which the instance has a single connected level set.
    pub rho_lower: f64,
    /// First coordinate separating the two clusters.
    pub divider: Option<f64>,
    pub metadata: StructureMetadata,
    sampler: OnceLock<InverseCdf>,
}

impl PartialEq for GroundTruthDensity {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl AnalyticDensity for GroundTruthDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn density(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Line { g, depth } => {
                let inside = depth.is_none_or(|d| (0.0..=d).contains(&x[1]));
                if inside {
                    self.scale * g.eval(x[0])
                } else {
                    0.0
                }
            }
            Shape::Ball { radius } => {
                let r = NormKind::Euclidean.norm(x);
                if r <= *radius {
                    self.scale
                } else {
                    0.0
                }
            }
            Shape::RadialBump { radius } => {
                let r = NormKind::Euclidean.norm(x);
                if r <= *radius {
                    self.scale * 0.5 * (1.0 + (std::f64::consts::PI * r / radius).cos())
                } else {
                    0.0
                }
            }
        }
    }

    fn support(&self) -> BoxRegion {
        self.support.clone()
    }

    fn sup_norm(&self) -> f64 {
        self.h_sup
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        self.breaks.get(axis).cloned().unwrap_or_default()
    }
}

fn integrate_1d(g: &Profile1d, breaks: &[f64]) -> f64 {
    quad::integrate_pieces(|x| g.eval(x), breaks, 1e-13, 1e-15, 4000).value
}

fn line_instance(
    name: &str,
    spec: InstanceSpec,
    g: Profile1d,
    breaks: Vec<f64>,
    depth: Option<f64>,
    g_sup: f64,
) -> GroundTruthDensity {
    let mass = integrate_1d(&g, &breaks) * depth.unwrap_or(1.0);
    let scale = 1.0 / mass;
    let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
    let (support, all_breaks, dim) = match depth {
        None => (BoxRegion { lo: vec![lo], hi: vec![hi] }, vec![breaks], 1),
        Some(d) => (
            BoxRegion {
                lo: vec![lo, 0.0],
                hi: vec![hi, d],
            },
            vec![breaks, vec![0.0, d]],
            2,
        ),
    };
    GroundTruthDensity {
        name: name.to_string(),
        spec,
        dim,
        shape: Shape::Line { g, depth },
        scale,
        support,
        h_sup: scale * g_sup,
        breaks: all_breaks,
        rho_star: None,
        rho_star_star: None,
        rho_lower: 0.0,
        divider: None,
        metadata: StructureMetadata {
            gamma: 1.0,
            c_thick: 1.0,
            delta_thick: 1.0,
            kappa: None,
            c_sep_lower: None,
            c_sep_upper: None,
            vartheta: None,
            c_flat: None,
            alpha: None,
            c_bound: None,
        },
        sampler: OnceLock::new(),
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be positive and finite"))
    }
}

fn two_plateaus(p: &TwoPlateausParams) -> Result<GroundTruthDensity> {
    let [a1, b1] = p.left;
    let [a2, b2] = p.right;
    if !(a1 < b1 && b1 < a2 && a2 < b2) {
        return Err(Error::param("two_plateaus", "intervals must be ordered and disjoint"));
    }
    positive("heights", p.heights[0])?;
    positive("heights", p.heights[1])?;
    let g = Profile1d::Steps(vec![(a1, b1, p.heights[0]), (a2, b2, p.heights[1])]);
    let g_sup = p.heights[0].max(p.heights[1]);
    let mut t = line_instance(
        "two_plateaus",
        InstanceSpec::TwoPlateaus(p.clone()),
        g,
        vec![a1, b1, a2, b2],
        None,
        g_sup,
    );
    let low = t.scale * p.heights[0].min(p.heights[1]);
    let gap = a2 - b1;
    t.rho_star = Some(0.0);
    t.rho_star_star = Some(low);
    t.divider = Some(0.5 * (b1 + a2));
    t.metadata.delta_thick = (0.5 * (b1 - a1).min(b2 - a2)).min(1.0);
    t.metadata.kappa = Some(f64::INFINITY);
    t.metadata.c_sep_lower = Some(gap / 3.0);
    t.metadata.c_sep_upper = Some(gap / 3.0);
    // {0 < h < s} is empty for s ≤ the lower plateau height.
    t.metadata.vartheta = Some(f64::INFINITY);
    t.metadata.c_flat = Some(1.0 / low);
    t.metadata.alpha = Some(1.0);
    t.metadata.c_bound = Some(4.0);
    Ok(t)
}

fn poly_valley(p: &PolyValleyParams) -> Result<GroundTruthDensity> {
    positive("p", p.p)?;
    positive("valley", p.valley)?;
    positive("plateau", p.plateau)?;
    positive("ramp", p.ramp)?;
    if !(0.0..1.0).contains(&p.floor) {
        return Err(Error::param("floor", "must lie in [0, 1)"));
    }
    let depth = match p.dim {
        1 => None,
        2 => {
            positive("depth", p.depth)?;
            Some(p.depth)
        }
        d => return Err(Error::param("dim", format!("poly_valley supports dim 1 or 2, got {d}"))),
    };
    let edge = p.valley + p.plateau + p.ramp;
    let breaks = vec![
        -edge,
        -p.valley - p.plateau,
        -p.valley,
        0.0,
        p.valley,
        p.valley + p.plateau,
        edge,
    ];
    let g = Profile1d::Valley {
        p: p.p,
        floor: p.floor,
        valley: p.valley,
        plateau: p.plateau,
        ramp: p.ramp,
    };
    let mut t = line_instance("poly_valley", InstanceSpec::PolyValley(p.clone()), g, breaks, depth, 1.0);
    let top = t.h_sup;
    let rho_star = t.scale * p.floor;
    let rise = top - rho_star;
    t.rho_star = Some(rho_star);
    t.rho_star_star = Some(top);
    t.rho_lower = rho_star;
    t.divider = Some(0.0);
    // Gap at level ρ* + ε′ is 2b (ε′/Δ)^{1/p}, so τ*(ε′) = (2b/3) Δ^{-1/p} ε′^{1/p}.
    let c_sep = 2.0 * p.valley / 3.0 * rise.powf(-1.0 / p.p);
    let m = &mut t.metadata;
    m.kappa = Some(p.p);
    m.c_sep_lower = Some(c_sep);
    m.c_sep_upper = Some(c_sep);
    m.delta_thick = (0.5 * p.plateau).min(1.0);
    let extent = p.valley + p.plateau + p.ramp;
    if let Some(d) = depth {
        // Rectangles: the corners sit √2 δ (Euclidean) from the eroded set.
        m.c_thick = std::f64::consts::SQRT_2;
        m.delta_thick = m.delta_thick.min(0.5 * d);
        m.c_bound = Some(2.0 * 2.0 * (extent + d));
    } else {
        m.c_bound = Some(4.0);
    }
    m.alpha = Some(1.0);
    // Flatness at ρ*: Lebesgue measure of {0 < h − ρ* < s} is
    // [2b (s/Δ)^{1/p} + 2 r s / top] × depth for s ≤ Δ (valley and outer ramps).
    let vartheta = 1.0 / p.p;
    let width = depth.unwrap_or(1.0);
    let flat_measure = |s: f64| {
        let s = s.min(rise);
        width * (2.0 * p.valley * (s / rise).powf(vartheta) + 2.0 * p.ramp * s / top)
    };
    let c_flat = (0..=2000)
        .map(|i| rise * 10f64.powf(-8.0 + 8.0 * i as f64 / 2000.0))
        .map(|s| flat_measure(s).powf(p.p) / s)
        .fold(0.0, f64::max);
    m.vartheta = Some(vartheta);
    m.c_flat = Some(c_flat * (1.0 + 1e-6));
    Ok(t)
}

fn bridged(p: &BridgedParams) -> Result<GroundTruthDensity> {
    positive("half_gap", p.half_gap)?;
    positive("plateau", p.plateau)?;
    if !(p.bridge > 0.0 && p.bridge < 1.0) {
        return Err(Error::param("bridge", "must lie in (0, 1)"));
    }
    let (b, w) = (p.half_gap, p.plateau);
    let g = Profile1d::Steps(vec![(-b - w, -b, 1.0), (b, b + w, 1.0), (-b, b, p.bridge)]);
    let mut t = line_instance(
        "bridged",
        InstanceSpec::Bridged(p.clone()),
        g,
        vec![-b - w, -b, b, b + w],
        None,
        1.0,
    );
    let rho_star = t.scale * p.bridge;
    t.rho_star = Some(rho_star);
    t.rho_star_star = Some(t.h_sup);
    t.rho_lower = rho_star;
    t.divider = Some(0.0);
    let m = &mut t.metadata;
    m.delta_thick = (0.5 * w).min(1.0);
    m.kappa = Some(f64::INFINITY);
    m.c_sep_lower = Some(2.0 * b / 3.0);
    m.c_sep_upper = Some(2.0 * b / 3.0);
    m.vartheta = Some(f64::INFINITY);
    m.c_flat = Some(1.0 / (t.h_sup - rho_star));
    m.alpha = Some(1.0);
    m.c_bound = Some(4.0);
    Ok(t)
}

fn ball(p: &BallParams) -> Result<GroundTruthDensity> {
    positive("radius", p.radius)?;
    radial_instance("ball", InstanceSpec::Ball(p.clone()), p, Shape::Ball { radius: p.radius })
}

fn bump(p: &BallParams) -> Result<GroundTruthDensity> {
    positive("radius", p.radius)?;
    radial_instance("bump", InstanceSpec::Bump(p.clone()), p, Shape::RadialBump { radius: p.radius })
}

fn radial_instance(name: &str, spec: InstanceSpec, p: &BallParams, shape: Shape) -> Result<GroundTruthDensity> {
    if !(1..=2).contains(&p.dim) {
        return Err(Error::param("dim", format!("{name} supports dim 1 or 2, got {}", p.dim)));
    }
    let r = p.radius;
    if p.dim == 1 {
        let (g, breaks) = match shape {
            Shape::Ball { .. } => (Profile1d::Steps(vec![(-r, r, 1.0)]), vec![-r, r]),
            _ => (Profile1d::Cosine { radius: r }, vec![-r, 0.0, r]),
        };
        let mut t = line_instance(name, spec, g, breaks, None, 1.0);
        t.rho_lower = t.h_sup;
        t.metadata.delta_thick = (0.25 * r).min(1.0);
        t.metadata.alpha = Some(1.0);
        return Ok(t);
    }
    let d = p.dim as f64;
    let (scale, h_sup) = match shape {
        Shape::Ball { .. } => {
            let s = 1.0 / (euclidean_ball_volume(p.dim) * r.powf(d));
            (s, s)
        }
        _ => {
            // ∫ (1 + cos(π s/R))/2 · d V_d s^{d−1} ds over [0, R].
            let radial = quad::integrate(
                |s| 0.5 * (1.0 + (std::f64::consts::PI * s / r).cos()) * s.powi(p.dim as i32 - 1),
                0.0,
                r,
                1e-14,
                1e-16,
            )
            .value;
            let s = 1.0 / (d * euclidean_ball_volume(p.dim) * radial);
            (s, s)
        }
    };
    let support = BoxRegion {
        lo: vec![-r; p.dim],
        hi: vec![r; p.dim],
    };
    let breaks = vec![vec![-r, 0.0, r]; p.dim];
    Ok(GroundTruthDensity {
        name: name.to_string(),
        spec,
        dim: p.dim,
        shape,
        scale,
        support,
        h_sup,
        breaks,
        rho_star: None,
        rho_star_star: None,
        rho_lower: h_sup,
        divider: None,
        metadata: StructureMetadata {
            gamma: 1.0,
            c_thick: 1.0,
            delta_thick: (0.25 * r).min(1.0),
            kappa: None,
            c_sep_lower: None,
            c_sep_upper: None,
            vartheta: None,
            c_flat: None,
            alpha: Some(1.0),
            c_bound: None,
        },
        sampler: OnceLock::new(),
    })
}

fn gauss_mixture(p: &GaussMixtureParams) -> Result<GroundTruthDensity> {
    positive("sds", p.sds[0])?;
    positive("sds", p.sds[1])?;
    positive("weights", p.weights[0])?;
    positive("weights", p.weights[1])?;
    if !(p.means[0] < p.means[1]) {
        return Err(Error::param("means", "must be increasing"));
    }
    let total = p.weights[0] + p.weights[1];
    let weights = [p.weights[0] / total, p.weights[1] / total];
    let lo = p.means[0] - 9.0 * p.sds[0];
    let hi = p.means[1] + 9.0 * p.sds[1];
    let g = Profile1d::Mixture {
        means: p.means,
        sds: p.sds,
        weights,
    };
    // Maxima and the valley minimum by dense scans.
    let scan = |a: f64, b: f64, maximise: bool| {
        let steps = 200_000;
        let mut best = (a, g.eval(a));
        for i in 0..=steps {
            let x = a + (b - a) * i as f64 / steps as f64;
            let v = g.eval(x);
            if (maximise && v > best.1) || (!maximise && v < best.1) {
                best = (x, v);
            }
        }
        best
    };
    let mid = 0.5 * (p.means[0] + p.means[1]);
    let left_peak = scan(lo, mid, true);
    let right_peak = scan(mid, hi, true);
    let valley = scan(left_peak.0, right_peak.0, false);
    if valley.1 >= left_peak.1.min(right_peak.1) * (1.0 - 1e-9) {
        return Err(Error::GroundTruth("mixture is unimodal; no split level".into()));
    }
    let g_sup = left_peak.1.max(right_peak.1);
    let mut t = line_instance(
        "gauss_mixture",
        InstanceSpec::GaussMixture(p.clone()),
        g,
        vec![lo, p.means[0], valley.0, p.means[1], hi],
        None,
        g_sup,
    );
    t.rho_star = Some(t.scale * valley.1);
    t.rho_star_star = Some(t.scale * left_peak.1.min(right_peak.1));
    t.rho_lower = t.scale * valley.1;
    t.divider = Some(valley.0);
    // Quadratic valley: separation exponent 2, constant fitted by `tau_star`.
    t.metadata.kappa = Some(2.0);
    t.metadata.delta_thick = 0.1 * p.sds[0].min(p.sds[1]);
    t.metadata.alpha = Some(1.0);
    Ok(t)
}

/// Cumulative table over the one-dimensional break cells, refined by
/// safeguarded Newton steps inside the selected cell.
#[derive(Debug, Clone)]
struct InverseCdf {
    edges: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GroundTruthDensity {
    fn profile(&self) -> Option<(&Profile1d, f64)> {
        match &self.shape {
            Shape::Line { g, .. } => Some((g, self.scale)),
            _ => None,
        }
    }

    fn inverse_cdf(&self) -> &InverseCdf {
        self.sampler.get_or_init(|| {
            let breaks = &self.breaks[0];
            let cells_per_piece = 256;
            let mut edges = Vec::new();
            for w in breaks.windows(2) {
                for j in 0..cells_per_piece {
                    edges.push(w[0] + (w[1] - w[0]) * j as f64 / cells_per_piece as f64);
                }
            }
            edges.push(*breaks.last().expect("breaks"));
            let mut cumulative = vec![0.0];
            let mut acc = 0.0;
            for w in edges.windows(2) {
                acc += self.mass_1d(w[0], w[1]);
                cumulative.push(acc);
            }
            InverseCdf { edges, cumulative }
        })
    }

    /// `∫_a^b h` for one-dimensional instances (marginal of the first axis
    /// for extruded ones).
    fn mass_1d(&self, a: f64, b: f64) -> f64 {
        let (g, scale) = self.profile().expect("one-dimensional profile");
        let width = match &self.shape {
            Shape::Line { depth: Some(d), .. } => *d,
            _ => 1.0,
        };
        let r = quad::integrate_pieces(|x| g.eval(x), &[a, b], 1e-14, 1e-16, 64);
        r.value * scale * width
    }

    /// Cumulative distribution function of the first coordinate.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if self.profile().is_none() {
            return Err(Error::GroundTruth("cdf requires a one-dimensional profile".into()));
        }
        let table = self.inverse_cdf();
        let edges = &table.edges;
        if x <= edges[0] {
            return Ok(0.0);
        }
        if x >= edges[edges.len() - 1] {
            return Ok(1.0);
        }
        let cell = edges.partition_point(|&e| e <= x) - 1;
        Ok(((table.cumulative[cell] + self.mass_1d(edges[cell], x)) / table.cumulative[edges.len() - 1]).min(1.0))
    }

    fn invert(&self, u: f64) -> f64 {
        let table = self.inverse_cdf();
        let total = table.cumulative[table.cumulative.len() - 1];
        let target = u * total;
        let cell = (table.cumulative.partition_point(|&c| c <= target).max(1) - 1).min(table.edges.len() - 2);
        let (mut lo, mut hi) = (table.edges[cell], table.edges[cell + 1]);
        let need = target - table.cumulative[cell];
        let a = lo;
        let (g, scale) = self.profile().expect("profile");
        let width = match &self.shape {
            Shape::Line { depth: Some(d), .. } => *d,
            _ => 1.0,
        };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..60 {
            let f = self.mass_1d(a, x) - need;
            if f.abs() <= 1e-15 * total {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = scale * width * g.eval(x);
            let newton = if slope > 0.0 { x - f / slope } else { f64::NAN };
            x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
                break;
            }
        }
        x
    }

    /// `n` i.i.d. draws; inverse-CDF in the first coordinate, rejection
    /// sampling for radial two-dimensional shapes.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Sampling("n must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = Vec::with_capacity(n * self.dim);
        match &self.shape {
            Shape::Line { depth, .. } => {
                for _ in 0..n {
                    let u: f64 = rng.random();
                    coords.push(self.invert(u));
                    if let Some(d) = depth {
                        coords.push(rng.random_range(0.0..=*d));
                    }
                }
            }
            _ => self.rejection(n, &mut rng, &mut coords)?,
        }
        Dataset::new(coords, self.dim)
    }

    fn rejection(&self, n: usize, rng: &mut ChaCha8Rng, coords: &mut Vec<f64>) -> Result<()> {
        let volume = self.support.volume();
        let efficiency = 1.0 / (self.h_sup * volume);
        if efficiency < 0.01 {
            return Err(Error::Sampling(format!(
                "rejection efficiency {efficiency:.4} is below 1%"
            )));
        }
        let mut x = vec![0.0; self.dim];
        let mut accepted = 0;
        while accepted < n {
            for k in 0..self.dim {
                x[k] = rng.random_range(self.support.lo[k]..=self.support.hi[k]);
            }
            if rng.random::<f64>() * self.h_sup < self.density(&x) {
                coords.extend_from_slice(&x);
                accepted += 1;
            }
        }
        Ok(())
    }

    pub fn is_bimodal(&self) -> bool {
        self.rho_star.is_some()
    }

    /// Cluster (1 or 2) of `x` within `M_ρ` for `ρ ∈ (ρ*, ρ**]`.
    pub fn cluster_membership(&self, x: &[f64], rho: f64) -> Option<u8> {
        let (rs, rss, divider) = (self.rho_star?, self.rho_star_star?, self.divider?);
        if !(rho > rs && rho <= rss) || self.density(x) < rho {
            return None;
        }
        Some(if x[0] < divider { 1 } else { 2 })
    }

    /// Membership in `A*_i`, the union over `ρ > ρ*` of cluster `i`:
    /// the points of side `i` where `h > ρ*`.
    pub fn in_true_cluster(&self, i: u8, x: &[f64]) -> bool {
        match (self.rho_star, self.divider) {
            (Some(rs), Some(divider)) => self.density(x) > rs && ((x[0] < divider) == (i == 1)),
            _ => false,
        }
    }

    /// Evaluation grid over the support widened by `margin`.
    pub fn grid(&self, spacing: f64, margin: f64) -> Result<GridSpec> {
        GridSpec::covering(&self.support.expanded(margin), spacing)
    }
}

/// `{h ≥ ρ}` on the grid.
pub fn level_set_oracle(truth: &GroundTruthDensity, rho: f64, spec: &GridSpec) -> GridSet {
    level_set_grid(truth, rho, spec)
}

/// Number of face-connected components of `{h ≥ ρ}` on the grid.
pub fn grid_component_count(truth: &GroundTruthDensity, rho: f64, spec: &GridSpec) -> usize {
    level_set_oracle(truth, rho, spec).components().len()
}

/// `τ*(ε′)`: one third of the distance between the two components at level `ρ* + ε′`.
pub fn tau_star(truth: &GroundTruthDensity, eps_prime: f64, spec: &GridSpec, norm: NormKind) -> Result<f64> {
    let rho_star = truth
        .rho_star
        .ok_or_else(|| Error::GroundTruth(format!("{} has no split level", truth.name)))?;
    let set = level_set_oracle(truth, rho_star + eps_prime, spec);
    let comps = set.components();
    if comps.len() != 2 {
        return Err(Error::GroundTruth(format!(
            "level {} has {} grid components, expected 2",
            rho_star + eps_prime,
            comps.len()
        )));
    }
    let a = GridSet::from_nodes(spec.clone(), &comps[0]);
    let b = GridSet::from_nodes(spec.clone(), &comps[1]);
    Ok(a.distance_to(&b, norm)? / 3.0)
}

/// `ε* = ε + (τ / c_sep)^κ`; for κ = ∞ this is `ε` when `τ ≤ c_sep` and
/// infinite otherwise.
pub fn epsilon_star(meta: &StructureMetadata, epsilon: f64, tau: f64) -> Result<f64> {
    let (kappa, c_sep) = match (meta.kappa, meta.c_sep_lower) {
        (Some(k), Some(c)) => (k, c),
        _ => return Err(Error::GroundTruth("separation constants are not known".into())),
    };
    if kappa.is_infinite() {
        return Ok(if tau <= c_sep { epsilon } else { f64::INFINITY });
    }
    Ok(epsilon + (tau / c_sep).powf(kappa))
}

/// Split level found by bisection on the grid component count: the
/// largest level with one component, to within `tol`.
pub fn scan_split_level(truth: &GroundTruthDensity, spec: &GridSpec, tol: f64) -> Result<f64> {
    let top = truth
        .rho_star_star
        .ok_or_else(|| Error::GroundTruth(format!("{} has no split level", truth.name)))?;
    let (mut lo, mut hi) = (0.0, top);
    // A smooth peak at ρ** is not hit by any node exactly; step down to the
    // first level where the grid sees both clusters.
    let mut steps = 0;
    while grid_component_count(truth, hi, spec) < 2 {
        steps += 1;
        if steps > 1000 {
            return Err(Error::GroundTruth("no two components below the upper level".into()));
        }
        hi = top * (1.0 - steps as f64 / 1000.0);
    }
    if grid_component_count(truth, tol.min(top * 1e-9), spec) >= 2 {
        return Ok(0.0);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if grid_component_count(truth, mid, spec) >= 2 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Envelope fit of `ψ*_{M_ρ}(δ)` and violations of the declared thickness.
#[derive(Debug, Clone, Serialize)]
pub struct ThicknessFit {
    pub gamma_fit: f64,
    pub c_fit: f64,
    /// `(ρ, δ, ψ*)` with `ψ* > c_thick δ^γ` beyond grid resolution.
    pub violations: Vec<(f64, f64, f64)>,
    /// Bandwidths skipped because they exceed `δ_thick`.
    pub skipped: Vec<f64>,
}

pub fn thickness_oracle(
    truth: &GroundTruthDensity,
    rho_grid: &[f64],
    delta_grid: &[f64],
    spec: &GridSpec,
    norm: NormKind,
) -> Result<ThicknessFit> {
    let meta = &truth.metadata;
    let slack = 2.0 * spec.spacing;
    let mut envelope = Vec::new();
    let mut violations = Vec::new();
    let mut skipped = Vec::new();
    for &delta in delta_grid {
        if !(delta > 0.0 && delta <= meta.delta_thick) {
            skipped.push(delta);
            continue;
        }
        let mut worst: f64 = 0.0;
        for &rho in rho_grid {
            let set = level_set_oracle(truth, rho, spec);
            if set.is_empty() {
                continue;
            }
            let psi = set.psi_star(delta, norm)?;
            if psi > meta.c_thick * delta.powf(meta.gamma) + slack {
                violations.push((rho, delta, psi));
            }
            if psi.is_finite() {
                worst = worst.max(psi);
            }
        }
        if worst > 0.0 {
            envelope.push((delta.ln(), worst.ln()));
        }
    }
    let (gamma_fit, c_fit) = if envelope.len() >= 2 {
        let fit = crate::harness::stats::ols(
            &envelope.iter().map(|e| e.0).collect::<Vec<_>>(),
            &envelope.iter().map(|e| e.1).collect::<Vec<_>>(),
        );
        let c = envelope
            .iter()
            .map(|(ld, lp)| (lp - fit.slope * ld).exp())
            .fold(0.0, f64::max);
        (fit.slope, c)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ThicknessFit {
        gamma_fit,
        c_fit,
        violations,
        skipped,
    })
}

/// Checks `μ({0 < h − ρ* < s}) ≤ (c_flat s)^ϑ` on an `s`-grid; returns the
/// violating `(s, measure, bound)` triples (grid measure with one-cell slack
/// per boundary crossing).
pub fn check_flatness(truth: &GroundTruthDensity, s_grid: &[f64], spec: &GridSpec) -> Result<Vec<(f64, f64, f64)>> {
    let meta = &truth.metadata;
    let (rs, vartheta, c_flat) = match (truth.rho_star, meta.vartheta, meta.c_flat) {
        (Some(r), Some(v), Some(c)) => (r, v, c),
        _ => return Err(Error::GroundTruth("flatness constants are not known".into())),
    };
    let nodes: Vec<f64> = (0..spec.len()).map(|i| truth.density(&spec.node(i))).collect();
    let cross_section = spec.region().volume() / (spec.region().hi[0] - spec.region().lo[0]).max(f64::MIN_POSITIVE);
    let slack = 8.0 * spec.spacing * cross_section.max(1.0);
    let mut out = Vec::new();
    for &s in s_grid {
        let count = nodes.iter().filter(|&&h| h - rs > 0.0 && h - rs < s).count();
        let measure = count as f64 * spec.cell_volume();
        let bound = (c_flat * s).powf(vartheta);
        let bound = if vartheta.is_infinite() && c_flat * s < 1.0 { 0.0 } else { bound };
        if measure > bound + slack {
            out.push((s, measure, bound));
        }
    }
    Ok(out)
}

/// Checks `μ((A^i_ρ)^{+δ} \ (A^i_ρ)^{−δ}) ≤ c_bound δ^α` for both clusters on
/// `(ρ, δ)` grids; returns violating `(ρ, δ, measure)` triples.
pub fn check_boundary(
    truth: &GroundTruthDensity,
    rho_grid: &[f64],
    delta_grid: &[f64],
    spec: &GridSpec,
    norm: NormKind,
) -> Result<Vec<(f64, f64, f64)>> {
    let meta = &truth.metadata;
    let (alpha, c_bound) = match (meta.alpha, meta.c_bound) {
        (Some(a), Some(c)) => (a, c),
        _ => return Err(Error::GroundTruth("boundary constants are not known".into())),
    };
    let mut out = Vec::new();
    for &rho in rho_grid {
        let comps = level_set_oracle(truth, rho, spec).components();
        for comp in &comps {
            let set = GridSet::from_nodes(spec.clone(), comp);
            for &delta in delta_grid {
                if delta > meta.delta_thick {
                    continue;
                }
                let outer = set.dilate(delta, norm)?;
                let inner = set.erode(delta, norm)?;
                let band = outer.intersection(&inner.complement())?;
                let measure = band.measure();
                // Each boundary crossing of the band is resolved to one cell.
                let slack = 4.0 * spec.cell_volume() * (comp.len() as f64).powf((spec.dim() as f64 - 1.0) / spec.dim() as f64).max(1.0);
                if measure > c_bound * delta.powf(alpha) + slack {
                    out.push((rho, delta, measure));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_build() {
        for name in InstanceSpec::NAMES {
            let t = InstanceSpec::by_name(name).unwrap().build().unwrap();
            assert_eq!(t.name, name);
        }
        assert!(InstanceSpec::by_name("nope").is_err());
    }

    #[test]
    fn two_plateaus_example() {
        let t = InstanceSpec::by_name("two_plateaus").unwrap().build().unwrap();
        assert_eq!(t.rho_star, Some(0.0));
        assert!((t.sup_norm() - 1.0).abs() < 1e-12);
        assert_eq!(t.cluster_membership(&[0.2], 0.5), Some(1));
        assert_eq!(t.cluster_membership(&[2.2], 0.5), Some(2));
        assert_eq!(t.cluster_membership(&[1.2], 0.5), None);
    }

    #[test]
    fn sampling_is_deterministic() {
        let t = InstanceSpec::by_name("poly_valley").unwrap().build().unwrap();
        assert_eq!(t.sample(100, 7).unwrap(), t.sample(100, 7).unwrap());
        assert_ne!(t.sample(100, 7).unwrap(), t.sample(100, 8).unwrap());
    }

    #[test]
    fn cdf_is_monotone_and_complete() {
        let t = InstanceSpec::by_name("poly_valley").unwrap().build().unwrap();
        let mut prev = 0.0;
        for i in 0..=200 {
            let x = -2.0 + 4.0 * i as f64 / 200.0;
            let c = t.cdf(x).unwrap();
            assert!(c >= prev - 1e-15);
            prev = c;
        }
        assert!((prev - 1.0).abs() < 1e-12);
        assert!((t.cdf(0.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn epsilon_star_examples() {
        let mut m = InstanceSpec::by_name("poly_valley").unwrap().build().unwrap().metadata;
        m.kappa = Some(1.0);
        m.c_sep_lower = Some(1.0);
        assert!((epsilon_star(&m, 0.01, 0.1).unwrap() - 0.11).abs() < 1e-15);
        m.kappa = Some(f64::INFINITY);
        assert_eq!(epsilon_star(&m, 0.01, 0.5).unwrap(), 0.01);
    }
}
