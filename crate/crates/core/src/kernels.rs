//! Radial kernel profiles `K(x) = c · k(‖x‖)`, bandwidth scaling and the
//! tail functions κ1 (mass outside a ball) and κ∞ (supremum outside a ball).

use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta, erf::erfc, gamma::gamma};

use crate::error::{Error, Result};
use crate::quad;

/// Norm used for kernel arguments, neighbourhood graphs and set morphology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Euclidean,
    Supremum,
}

impl NormKind {
    pub fn norm(self, v: &[f64]) -> f64 {
        if v.len() == 1 {
            return v[0].abs();
        }
        match self {
            NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Supremum => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        if a.len() == 1 {
            return (a[0] - b[0]).abs();
        }
        match self {
            NormKind::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            NormKind::Supremum => a
                .iter()
                .zip(b)
                .fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        }
    }

    /// Lebesgue volume of the closed unit ball of this norm in `R^dim`.
    pub fn unit_ball_volume(self, dim: usize) -> f64 {
        match self {
            NormKind::Euclidean => euclidean_ball_volume(dim),
            NormKind::Supremum => 2f64.powi(dim as i32),
        }
    }
}

/// Volume `V_d` of the Euclidean unit ball.
pub fn euclidean_ball_volume(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => {
            let d = dim as f64;
            PI.powf(d / 2.0) / gamma(d / 2.0 + 1.0)
        }
    }
}

/// Shape `k` of a radial kernel, before normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Rectangular,
    Triangular,
    Epanechnikov,
    Quartic,
    Triweight,
    Tricube,
    Gaussian,
    Laplacian,
}

impl Profile {
    pub const ALL: [Profile; 8] = [
        Profile::Rectangular,
        Profile::Triangular,
        Profile::Epanechnikov,
        Profile::Quartic,
        Profile::Triweight,
        Profile::Tricube,
        Profile::Gaussian,
        Profile::Laplacian,
    ];

    pub fn bounded_support(self) -> bool {
        !matches!(self, Profile::Gaussian | Profile::Laplacian)
    }

    /// Unnormalised profile value `k(r)` for `r ≥ 0`.
    pub fn shape(self, r: f64) -> f64 {
        let inside = r <= 1.0;
        match self {
            Profile::Rectangular => f64::from(u8::from(inside)),
            Profile::Triangular if inside => 1.0 - r,
            Profile::Epanechnikov if inside => 1.0 - r * r,
            Profile::Quartic if inside => (1.0 - r * r).powi(2),
            Profile::Triweight if inside => (1.0 - r * r).powi(3),
            Profile::Tricube if inside => (1.0 - r * r * r).powi(3),
            Profile::Gaussian => (-r * r).exp(),
            Profile::Laplacian => (-r).exp(),
            _ => 0.0,
        }
    }

    /// `lim_{s↓r} k(s)`, which equals `sup_{s>r} k(s)` for these non-increasing shapes.
    fn shape_right_limit(self, r: f64) -> f64 {
        match self {
            Profile::Rectangular => f64::from(u8::from(r < 1.0)),
            _ => self.shape(r),
        }
    }

    /// Closed form of `∫_0^∞ k(r) r^j dr`.
    fn radial_moment(self, j: usize) -> f64 {
        let j = j as f64;
        match self {
            Profile::Rectangular => 1.0 / (j + 1.0),
            Profile::Triangular => 1.0 / ((j + 1.0) * (j + 2.0)),
            Profile::Epanechnikov => 0.5 * beta((j + 1.0) / 2.0, 2.0),
            Profile::Quartic => 0.5 * beta((j + 1.0) / 2.0, 3.0),
            Profile::Triweight => 0.5 * beta((j + 1.0) / 2.0, 4.0),
            Profile::Tricube => beta((j + 1.0) / 3.0, 4.0) / 3.0,
            Profile::Gaussian => 0.5 * gamma((j + 1.0) / 2.0),
            Profile::Laplacian => gamma(j + 1.0),
        }
    }

    /// Truncation radius beyond which the shape is numerically zero.
    fn effective_radius(self) -> f64 {
        match self {
            Profile::Gaussian => 28.0,
            Profile::Laplacian => 760.0,
            _ => 1.0,
        }
    }
}

/// A normalised symmetric kernel `K(x) = c · k(‖x‖)` on `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kernel {
    pub profile: Profile,
    pub dim: usize,
    pub norm: NormKind,
    /// `c` such that `∫ K dλ^d = 1`.
    pub normalizer: f64,
    /// Smallest `c` with `K(x) ≤ c · exp(−‖x‖₂)` for all `x`.
    pub exp_tail_constant: f64,
}

/// Kernel selection as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub profile: Profile,
    #[serde(default)]
    pub norm: NormKind,
}

impl KernelSpec {
    pub fn build(&self, dim: usize) -> Result<Kernel> {
        Kernel::new(self.profile, dim, self.norm)
    }
}

impl Kernel {
    pub fn new(profile: Profile, dim: usize, norm: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if dim >= 2 && norm == NormKind::Supremum && !profile.bounded_support() {
            return Err(Error::UnsupportedKernel(format!(
                "{profile:?} profile with the supremum norm in dimension {dim}"
            )));
        }
        let surface = dim as f64 * norm.unit_ball_volume(dim);
        let normalizer = 1.0 / (surface * profile.radial_moment(dim - 1));
        let diagonal = match norm {
            NormKind::Euclidean => 1.0,
            NormKind::Supremum => (dim as f64).sqrt(),
        };
        let exp_tail_constant = normalizer * sup_shape_times_exp(profile, diagonal);
        Ok(Self {
            profile,
            dim,
            norm,
            normalizer,
            exp_tail_constant,
        })
    }

    pub fn bounded_support(&self) -> bool {
        self.profile.bounded_support()
    }

    /// `‖K‖∞ = K(0)`.
    pub fn sup_value(&self) -> f64 {
        self.normalizer
    }

    /// `K` as a function of the norm of its argument.
    #[inline]
    pub fn radial(&self, r: f64) -> f64 {
        self.normalizer * self.profile.shape(r)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.radial(self.norm.norm(x))
    }

    /// `K_δ(x) = δ^{-d} K(x/δ)`.
    pub fn eval_scaled(&self, delta: f64, x: &[f64]) -> f64 {
        self.radial(self.norm.norm(x) / delta) / delta.powi(self.dim as i32)
    }

    /// Radius beyond which `K` vanishes (or is below double precision).
    pub fn support_radius(&self) -> f64 {
        self.profile.effective_radius()
    }

    /// κ1(r): the kernel mass outside the ball of radius `r`.
    pub fn tail_kappa1(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 1.0;
        }
        if self.bounded_support() && r >= 1.0 {
            return 0.0;
        }
        match (self.profile, self.dim) {
            (Profile::Rectangular, d) => 1.0 - r.powi(d as i32),
            (Profile::Gaussian, 1) => erfc(r),
            (Profile::Laplacian, 1) => (-r).exp(),
            _ => {
                let surface = self.dim as f64 * self.norm.unit_ball_volume(self.dim);
                let upper = self.profile.effective_radius().max(r);
                let power = (self.dim - 1) as i32;
                let profile = self.profile;
                let mut breaks = vec![r];
                let mut edge = r.max(1.0);
                while edge < upper {
                    if edge > r {
                        breaks.push(edge);
                    }
                    edge *= 2.0;
                }
                breaks.push(upper);
                let tail = quad::integrate_pieces(
                    |s| profile.shape(s) * s.powi(power),
                    &breaks,
                    1e-12,
                    1e-300,
                    4000,
                );
                (self.normalizer * surface * tail.value).clamp(0.0, 1.0)
            }
        }
    }

    /// κ∞(r): the supremum of `K` outside the closed ball of radius `r`.
    pub fn tail_kappa_inf(&self, r: f64) -> f64 {
        self.normalizer * self.profile.shape_right_limit(r.max(0.0))
    }

    /// Check the exponential-tail bounds `κ1(r) ≤ c d² V_d e^{−r} r^{d−1}` and
    /// `κ∞(r) ≤ c e^{−r}` on a grid of radii, with `c = exp_tail_constant`.
    pub fn check_exponential_tail_bounds(&self, r_grid: &[f64]) -> Result<TailBoundReport> {
        const TOLERANCE: f64 = 1e-9;
        let d = self.dim as f64;
        let c = self.exp_tail_constant;
        let vd = euclidean_ball_volume(self.dim);
        let mut rows = Vec::with_capacity(r_grid.len());
        for &r in r_grid {
            let kappa1 = self.tail_kappa1(r);
            let kappa_inf = self.tail_kappa_inf(r);
            let bound1 = c * d * d * vd * (-r).exp() * r.powi(self.dim as i32 - 1);
            let bound_inf = c * (-r).exp();
            for (name, value, bound) in [("kappa1", kappa1, bound1), ("kappa_inf", kappa_inf, bound_inf)] {
                if value > bound * (1.0 + TOLERANCE) + 1e-300 {
                    return Err(Error::TailBoundViolated {
                        function: name,
                        radius: r,
                        value,
                        bound,
                    });
                }
            }
            rows.push(TailBoundRow {
                radius: r,
                kappa1,
                kappa1_bound: bound1,
                kappa_inf,
                kappa_inf_bound: bound_inf,
            });
        }
        let min_slack = rows
            .iter()
            .map(|row| (row.kappa1_bound - row.kappa1).min(row.kappa_inf_bound - row.kappa_inf))
            .fold(f64::INFINITY, f64::min);
        Ok(TailBoundReport {
            exp_tail_constant: c,
            rows,
            min_slack,
            passed: true,
        })
    }
}

/// One radius of [`Kernel::check_exponential_tail_bounds`].
#[derive(Debug, Clone, Serialize)]
pub struct TailBoundRow {
    pub radius: f64,
    pub kappa1: f64,
    pub kappa1_bound: f64,
    pub kappa_inf: f64,
    pub kappa_inf_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailBoundReport {
    pub exp_tail_constant: f64,
    pub rows: Vec<TailBoundRow>,
    /// Smallest gap `bound − value` over the grid (may be zero when tight).
    pub min_slack: f64,
    pub passed: bool,
}

/// `sup_{s ≥ 0} k(s) · exp(a s)`, by a dense scan followed by golden-section refinement.
fn sup_shape_times_exp(profile: Profile, a: f64) -> f64 {
    if profile == Profile::Laplacian && a == 1.0 {
        return 1.0;
    }
    let hi = if profile.bounded_support() { 1.0 } else { 10.0 + a };
    let g = |s: f64| profile.shape(s) * (a * s).exp();
    let steps = 20_000;
    let (mut best_s, mut best) = (0.0, g(0.0));
    for i in 1..=steps {
        let s = hi * i as f64 / steps as f64;
        let v = g(s);
        if v > best {
            best = v;
            best_s = s;
        }
    }
    let h = hi / steps as f64;
    let (mut lo, mut up) = ((best_s - h).max(0.0), (best_s + h).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = up - phi * (up - lo);
        let m2 = lo + phi * (up - lo);
        if g(m1) < g(m2) {
            lo = m1;
        } else {
            up = m2;
        }
    }
    best = best.max(g(0.5 * (lo + up)));
    best * (1.0 + 1e-12)
}
