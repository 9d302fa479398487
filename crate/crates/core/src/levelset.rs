//! The nested level-set family `L_ρ = {x_i : h_{D,δ}(x_i) ≥ ρ}^{+σ}` and
//! grid morphology used to compare estimates with true level sets.

use base64::Engine;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::connectivity::UnionFind;
use crate::density::{kde_eval_at_samples, AnalyticDensity, BoxRegion, Dataset, SampleDensities};
use crate::error::{Error, Result};
use crate::kernels::{Kernel, NormKind};
use crate::spatial::{offsets, CellGrid, SortedLine};

/// Largest number of nodes any evaluation grid may have.
pub const MAX_GRID_NODES: usize = 10_000_000;

/// KDE values at the samples for a fixed `(D, K, δ)` and dilation radius σ;
/// level sets are threshold filters of these values, hence nested exactly.
#[derive(Debug, Clone)]
pub struct KdeLevelFamily<'a> {
    pub data: &'a Dataset,
    pub kernel: &'a Kernel,
    pub delta: f64,
    pub sigma: f64,
    pub densities: SampleDensities,
    /// Sample indices by decreasing density (ties by index).
    by_value: Vec<usize>,
}

impl<'a> KdeLevelFamily<'a> {
    pub fn new(data: &'a Dataset, kernel: &'a Kernel, delta: f64, sigma: f64) -> Result<Self> {
        if !(delta > 0.0) || !(sigma > 0.0) {
            return Err(Error::param("delta/sigma", "must be positive"));
        }
        if data.dim() != kernel.dim {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim,
                got: data.dim(),
            });
        }
        let densities = kde_eval_at_samples(data, kernel, delta);
        let values = &densities.values;
        let mut by_value: Vec<usize> = (0..data.len()).collect();
        by_value.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        Ok(Self {
            data,
            kernel,
            delta,
            sigma,
            densities,
            by_value,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.densities.values
    }

    pub fn max_value(&self) -> f64 {
        self.by_value.first().map_or(0.0, |&i| self.densities.values[i])
    }

    /// `{i : h_{D,δ}(x_i) ≥ ρ}`, ascending.
    pub fn active(&self, rho: f64) -> Vec<usize> {
        let values = &self.densities.values;
        let count = self.by_value.partition_point(|&i| values[i] >= rho);
        let mut out = self.by_value[..count].to_vec();
        out.sort_unstable();
        out
    }

    pub fn estimate(&self, rho: f64) -> LevelSetEstimate<'a> {
        LevelSetEstimate {
            data: self.data,
            norm: self.kernel.norm,
            level: rho,
            sigma: self.sigma,
            active: self.active(rho),
        }
    }
}

/// One member `L_ρ` of the family: closed σ-balls around the active samples.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetEstimate<'a> {
    #[serde(skip)]
    pub data: &'a Dataset,
    pub norm: NormKind,
    pub level: f64,
    pub sigma: f64,
    pub active: Vec<usize>,
}

impl LevelSetEstimate<'_> {
    pub fn contains(&self, point: &[f64]) -> bool {
        self.active
            .iter()
            .any(|&i| self.norm.distance(point, self.data.point(i)) <= self.sigma)
    }

    /// Membership of every node of `spec`, through a spatial index.
    pub fn to_grid(&self, spec: &GridSpec) -> GridSet {
        let balls = BallUnion::new(self.data, &self.active, self.sigma, self.norm);
        GridSet::from_predicate(spec.clone(), |x| balls.contains(x))
    }
}

/// Union of closed balls of a common radius around selected samples.
pub struct BallUnion<'a> {
    data: &'a Dataset,
    radius: f64,
    norm: NormKind,
    line: Option<SortedLine>,
    cells: Option<CellGrid>,
}

impl<'a> BallUnion<'a> {
    pub fn new(data: &'a Dataset, centers: &[usize], radius: f64, norm: NormKind) -> Self {
        let (line, cells) = if data.dim() == 1 {
            (Some(SortedLine::new(data, Some(centers))), None)
        } else {
            (None, Some(CellGrid::new(data, Some(centers), radius * (1.0 + 1e-9))))
        };
        Self {
            data,
            radius,
            norm,
            line,
            cells,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if let Some(line) = &self.line {
            // |x − c| ≤ r, the same test the naive membership performs.
            let lo = line.keys.partition_point(|&c| x[0] - c > self.radius);
            return lo < line.keys.len() && (line.keys[lo] - x[0]).abs() <= self.radius;
        }
        let cells = self.cells.as_ref().expect("grid index");
        let key = cells.key(x);
        let mut hit = false;
        cells.for_each_nearby(&key, 1, |members| {
            hit = hit || members.iter().any(|&i| self.norm.distance(x, self.data.point(i)) <= self.radius);
        });
        hit
    }
}

/// Regular grid with a common spacing on every axis; node `i_k` on axis `k`
/// sits at `lo_k + i_k · spacing`. Nodes are stored with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub spacing: f64,
    pub shape: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Grid("spacing must be positive".into()));
        }
        if lo.len() != shape.len() || shape.contains(&0) {
            return Err(Error::Grid("shape must match the dimension and be non-empty".into()));
        }
        let nodes = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
        match nodes {
            Some(n) if n <= MAX_GRID_NODES => Ok(Self { lo, spacing, shape }),
            _ => Err(Error::Grid(format!(
                "grid {shape:?} exceeds the cap of {MAX_GRID_NODES} nodes"
            ))),
        }
    }

    /// Smallest grid with the given spacing whose nodes cover `region`.
    pub fn covering(region: &BoxRegion, spacing: f64) -> Result<Self> {
        let shape = region
            .lo
            .iter()
            .zip(&region.hi)
            .map(|(a, b)| ((b - a) / spacing).ceil().max(0.0) as usize + 1)
            .collect();
        Self::new(region.lo.clone(), spacing, shape)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for k in (0..self.dim().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.shape[k + 1];
        }
        s
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .zip(&self.lo)
            .map(|(&i, lo)| lo + i as f64 * self.spacing)
            .collect()
    }

    pub fn region(&self) -> BoxRegion {
        BoxRegion {
            lo: self.lo.clone(),
            hi: self
                .lo
                .iter()
                .zip(&self.shape)
                .map(|(lo, &s)| lo + (s - 1) as f64 * self.spacing)
                .collect(),
        }
    }
}

/// A subset of grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    pub spec: GridSpec,
    pub mask: Vec<bool>,
}

/// Portable export: JSON header plus the membership bits packed
/// little-endian-by-bit into bytes and base64 encoded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSetExport {
    pub lo: Vec<f64>,
    pub spacing: f64,
    pub shape: Vec<usize>,
    pub count: usize,
    pub mask_base64: String,
}

impl GridSet {
    pub fn from_predicate<F: FnMut(&[f64]) -> bool>(spec: GridSpec, mut f: F) -> Self {
        let mask = (0..spec.len()).map(|i| f(&spec.node(i))).collect();
        Self { spec, mask }
    }

    pub fn empty(spec: GridSpec) -> Self {
        let mask = vec![false; spec.len()];
        Self { spec, mask }
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.contains(&true)
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.spec.cell_volume()
    }

    pub fn complement(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }

    fn same_grid(&self, other: &GridSet) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Grid("sets live on different grids".into()));
        }
        Ok(())
    }

    pub fn intersection(&self, other: &GridSet) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            spec: self.spec.clone(),
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect(),
        })
    }

    /// Whether every member of `self` is a member of `other`.
    pub fn is_subset(&self, other: &GridSet) -> Result<bool> {
        self.same_grid(other)?;
        Ok(self.mask.iter().zip(&other.mask).all(|(a, b)| !a || *b))
    }

    /// Distance (in world units) from every node to the nearest member.
    pub fn distance_transform(&self, norm: NormKind) -> Vec<f64> {
        let h = self.spec.spacing;
        match norm {
            NormKind::Euclidean => squared_edt(&self.spec, &self.mask)
                .into_iter()
                .map(|d2| if d2 >= EDT_INF { f64::INFINITY } else { d2.sqrt() * h })
                .collect(),
            NormKind::Supremum => chessboard_dt(&self.spec, &self.mask)
                .into_iter()
                .map(|d| if d == u32::MAX { f64::INFINITY } else { f64::from(d) * h })
                .collect(),
        }
    }

    fn check_radius(&self, radius: f64) -> Result<()> {
        if radius < self.spec.spacing {
            return Err(Error::Grid(format!(
                "radius {radius} is below the grid spacing {}",
                self.spec.spacing
            )));
        }
        Ok(())
    }

    /// `A^{+r}`: nodes within distance `r` of a member.
    pub fn dilate(&self, radius: f64, norm: NormKind) -> Result<Self> {
        self.check_radius(radius)?;
        let limit = radius * (1.0 + 1e-12);
        let mask = self.distance_transform(norm).into_iter().map(|d| d <= limit).collect();
        Ok(Self {
            spec: self.spec.clone(),
            mask,
        })
    }

    /// `A^{−r} = X \ (X \ A)^{+r}`.
    pub fn erode(&self, radius: f64, norm: NormKind) -> Result<Self> {
        Ok(self.complement().dilate(radius, norm)?.complement())
    }

    /// `ψ*_A(r) = sup_{x∈A} d(x, A^{−r})`, infinite when `A^{−r}` is empty.
    pub fn psi_star(&self, radius: f64, norm: NormKind) -> Result<f64> {
        let eroded = self.erode(radius, norm)?;
        if eroded.is_empty() {
            return Ok(f64::INFINITY);
        }
        let dt = eroded.distance_transform(norm);
        Ok(self
            .mask
            .iter()
            .zip(&dt)
            .filter(|(m, _)| **m)
            .map(|(_, d)| *d)
            .fold(0.0, f64::max))
    }

    /// Grid measure of `A △ B`.
    pub fn symdiff_measure(&self, other: &GridSet) -> Result<f64> {
        self.same_grid(other)?;
        let count = self.mask.iter().zip(&other.mask).filter(|(a, b)| a != b).count();
        Ok(count as f64 * self.spec.cell_volume())
    }

    /// Connected components under face adjacency, as sorted node lists
    /// ordered by their smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let spec = &self.spec;
        let strides = spec.strides();
        let mut uf = UnionFind::new(spec.len());
        for flat in 0..spec.len() {
            if !self.mask[flat] {
                continue;
            }
            let idx = spec.unravel(flat);
            for k in 0..spec.dim() {
                if idx[k] + 1 < spec.shape[k] && self.mask[flat + strides[k]] {
                    uf.union(flat, flat + strides[k]);
                }
            }
        }
        let mut by_root: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut out: Vec<Vec<usize>> = Vec::new();
        for flat in (0..spec.len()).filter(|&f| self.mask[f]) {
            let root = uf.find(flat);
            let next = out.len();
            let id = *by_root.entry(root).or_insert(next);
            if id == out.len() {
                out.push(Vec::new());
            }
            out[id].push(flat);
        }
        out
    }

    pub fn from_nodes(spec: GridSpec, nodes: &[usize]) -> Self {
        let mut set = Self::empty(spec);
        for &n in nodes {
            set.mask[n] = true;
        }
        set
    }

    /// Smallest distance between a member of `self` and a member of `other`.
    pub fn distance_to(&self, other: &GridSet, norm: NormKind) -> Result<f64> {
        self.same_grid(other)?;
        let dt = other.distance_transform(norm);
        Ok(self
            .mask
            .iter()
            .zip(&dt)
            .filter(|(m, _)| **m)
            .map(|(_, d)| *d)
            .fold(f64::INFINITY, f64::min))
    }

    pub fn export(&self) -> GridSetExport {
        let mut bytes = vec![0u8; self.mask.len().div_ceil(8)];
        for (i, &b) in self.mask.iter().enumerate() {
            if b {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        GridSetExport {
            lo: self.spec.lo.clone(),
            spacing: self.spec.spacing,
            shape: self.spec.shape.clone(),
            count: self.count(),
            mask_base64: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }

    pub fn import(export: &GridSetExport) -> Result<Self> {
        let spec = GridSpec::new(export.lo.clone(), export.spacing, export.shape.clone())?;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(&export.mask_base64)
            .map_err(|e| Error::Grid(format!("bad mask encoding: {e}")))?;
        if bytes.len() != spec.len().div_ceil(8) {
            return Err(Error::Grid("mask length does not match the grid".into()));
        }
        let mask = (0..spec.len()).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
        Ok(Self { spec, mask })
    }
}

/// `{h ≥ ρ}` on the nodes of `spec`.
pub fn level_set_grid<D: AnalyticDensity + ?Sized>(truth: &D, rho: f64, spec: &GridSpec) -> GridSet {
    GridSet::from_predicate(spec.clone(), |x| truth.density(x) >= rho)
}

const EDT_INF: f64 = 1e30;

/// Exact squared Euclidean distance transform in grid units
/// (separable lower-envelope-of-parabolas algorithm).
fn squared_edt(spec: &GridSpec, mask: &[bool]) -> Vec<f64> {
    let mut f: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { EDT_INF }).collect();
    let strides = spec.strides();
    let len = spec.len();
    for axis in 0..spec.dim() {
        let n = spec.shape[axis];
        let stride = strides[axis];
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        let mut v = vec![0usize; n];
        let mut z = vec![0.0; n + 1];
        for start in 0..len {
            // Visit each line once, from its first node.
            if (start / stride) % n != 0 {
                continue;
            }
            for i in 0..n {
                line[i] = f[start + i * stride];
            }
            dt_1d(&line, &mut out, &mut v, &mut z);
            for i in 0..n {
                f[start + i * stride] = out[i];
            }
        }
    }
    f
}

fn dt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let intersect = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    for q in 1..n {
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        d[q] = (diff * diff + f[p]).min(EDT_INF);
    }
}

/// Exact chessboard distance transform in grid units (two raster passes
/// over the full `3^d − 1` neighbourhood).
fn chessboard_dt(spec: &GridSpec, mask: &[bool]) -> Vec<u32> {
    let dim = spec.dim();
    let strides = spec.strides();
    let mut dist: Vec<u32> = mask.iter().map(|&m| if m { 0 } else { u32::MAX }).collect();
    let all = offsets(dim, 1);
    let backward: Vec<&Vec<i64>> = all
        .iter()
        .filter(|o| o.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0))
        .collect();
    let forward: Vec<&Vec<i64>> = all
        .iter()
        .filter(|o| o.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0))
        .collect();
    let relax = |dist: &mut Vec<u32>, flat: usize, neighbours: &[&Vec<i64>]| {
        let idx = spec.unravel(flat);
        let mut best = dist[flat];
        'nb: for off in neighbours {
            let mut target = flat as i64;
            for k in 0..dim {
                let c = idx[k] as i64 + off[k];
                if c < 0 || c >= spec.shape[k] as i64 {
                    continue 'nb;
                }
                target += off[k] * strides[k] as i64;
            }
            let d = dist[target as usize];
            if d != u32::MAX && d + 1 < best {
                best = d + 1;
            }
        }
        dist[flat] = best;
    };
    for flat in 0..spec.len() {
        relax(&mut dist, flat, &backward);
    }
    for flat in (0..spec.len()).rev() {
        relax(&mut dist, flat, &forward);
    }
    dist
}

/// Monte-Carlo estimate of `μ(A △ B)` (Lebesgue measure) inside `region`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub draws: usize,
}

pub fn symdiff_measure_mc<A, B>(a: A, b: B, region: &BoxRegion, draws: usize, seed: u64) -> McEstimate
where
    A: Fn(&[f64]) -> bool,
    B: Fn(&[f64]) -> bool,
{
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dim = region.dim();
    let mut x = vec![0.0; dim];
    let mut hits = 0usize;
    for _ in 0..draws {
        for k in 0..dim {
            x[k] = rng.random_range(region.lo[k]..=region.hi[k]);
        }
        if a(&x) != b(&x) {
            hits += 1;
        }
    }
    let p = hits as f64 / draws as f64;
    let volume = region.volume();
    McEstimate {
        value: volume * p,
        std_error: volume * (p * (1.0 - p) / draws as f64).sqrt(),
        draws,
    }
}

/// Blur term `ϵ` of the sandwich inclusion: zero for bounded-support kernels
/// with `σ ≥ δ`, otherwise the smaller of the two admissible expressions.
pub fn horizontal_blur(kernel: &Kernel, delta: f64, sigma: f64, rho: f64, h_sup: f64) -> f64 {
    let r = sigma / delta;
    if kernel.bounded_support() && r >= 1.0 {
        return 0.0;
    }
    let general = (rho * kernel.tail_kappa1(r)).max(kernel.tail_kappa_inf(r) / delta.powi(kernel.dim as i32));
    let bounded_density = h_sup * kernel.tail_kappa1(r);
    general.min(bounded_density)
}

/// Node-wise check of `M_{ρ+ε+ϵ}^{−2σ} ⊆ L_ρ ⊆ M_{ρ−ε−ϵ}^{+2σ}`.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub rho: f64,
    pub epsilon: f64,
    pub blur: f64,
    pub grid_spacing: f64,
    pub nodes: usize,
    /// Nodes of the inner set missing from `L_ρ`.
    pub lower_violations: usize,
    /// Nodes of `L_ρ` outside the outer set.
    pub upper_violations: usize,
    /// Same counts after widening both inclusions by one grid spacing.
    pub interior_lower_violations: usize,
    pub interior_upper_violations: usize,
}

impl SandwichReport {
    pub fn interior_ok(&self) -> bool {
        self.interior_lower_violations == 0 && self.interior_upper_violations == 0
    }
}

#[allow(clippy::too_many_arguments)]
pub fn check_sandwich<D: AnalyticDensity + ?Sized>(
    estimate: &LevelSetEstimate<'_>,
    truth: &D,
    kernel: &Kernel,
    delta: f64,
    epsilon: f64,
    spec: &GridSpec,
) -> Result<SandwichReport> {
    let sigma = estimate.sigma;
    let rho = estimate.level;
    let norm = kernel.norm;
    let blur = horizontal_blur(kernel, delta, sigma, rho, truth.sup_norm());
    let h = spec.spacing;
    let estimate_grid = estimate.to_grid(spec);
    let inner_level = level_set_grid(truth, rho + epsilon + blur, spec);
    let outer_level = level_set_grid(truth, rho - epsilon - blur, spec);
    let count_missing = |inner: &GridSet, outer: &GridSet| {
        inner
            .mask
            .iter()
            .zip(&outer.mask)
            .filter(|(a, b)| **a && !**b)
            .count()
    };
    let lower = inner_level.erode(2.0 * sigma, norm)?;
    let upper = outer_level.dilate(2.0 * sigma, norm)?;
    let lower_slack = inner_level.erode(2.0 * sigma + h, norm)?;
    let upper_slack = outer_level.dilate(2.0 * sigma + h, norm)?;
    Ok(SandwichReport {
        rho,
        epsilon,
        blur,
        grid_spacing: h,
        nodes: spec.len(),
        lower_violations: count_missing(&lower, &estimate_grid),
        upper_violations: count_missing(&estimate_grid, &upper),
        interior_lower_violations: count_missing(&lower_slack, &estimate_grid),
        interior_upper_violations: count_missing(&estimate_grid, &upper_slack),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval_grid() -> GridSet {
        let spec = GridSpec::covering(&BoxRegion::new(vec![-1.0], vec![2.0]).unwrap(), 0.01).unwrap();
        GridSet::from_predicate(spec, |x| (0.0..=1.0).contains(&x[0]))
    }

    #[test]
    fn dilate_interval() {
        let a = interval_grid();
        let d = a.dilate(0.2, NormKind::Euclidean).unwrap();
        let xs: Vec<f64> = (0..d.spec.len()).filter(|&i| d.mask[i]).map(|i| d.spec.node(i)[0]).collect();
        assert!((xs[0] + 0.2).abs() <= 0.01 + 1e-12);
        assert!((xs[xs.len() - 1] - 1.2).abs() <= 0.01 + 1e-12);
        assert!(a.dilate(0.001, NormKind::Euclidean).is_err());
    }

    #[test]
    fn erode_disc() {
        let spec = GridSpec::covering(&BoxRegion::new(vec![-1.5, -1.5], vec![1.5, 1.5]).unwrap(), 0.02).unwrap();
        let disc = GridSet::from_predicate(spec.clone(), |x| x[0] * x[0] + x[1] * x[1] <= 1.0);
        let e = disc.erode(0.2, NormKind::Euclidean).unwrap();
        for i in 0..spec.len() {
            let p = spec.node(i);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if r <= 0.8 - 0.02 {
                assert!(e.mask[i]);
            }
            if r > 0.8 + 0.02 {
                assert!(!e.mask[i]);
            }
        }
        let psi = disc.psi_star(0.2, NormKind::Euclidean).unwrap();
        assert!((psi - 0.2).abs() <= 0.02 + 1e-9, "psi = {psi}");
    }

    #[test]
    fn edt_matches_bruteforce() {
        let spec = GridSpec::new(vec![0.0, 0.0], 1.0, vec![13, 9]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let set = GridSet::from_predicate(spec.clone(), |_| rng.random::<f64>() < 0.08);
        for norm in [NormKind::Euclidean, NormKind::Supremum] {
            let dt = set.distance_transform(norm);
            for i in 0..spec.len() {
                let want = (0..spec.len())
                    .filter(|&j| set.mask[j])
                    .map(|j| norm.distance(&spec.node(i), &spec.node(j)))
                    .fold(f64::INFINITY, f64::min);
                assert!((dt[i] - want).abs() < 1e-9 || (dt[i].is_infinite() && want.is_infinite()));
            }
        }
    }

    #[test]
    fn psi_star_empty_erosion_is_infinite() {
        let a = interval_grid();
        assert_eq!(a.psi_star(0.6, NormKind::Euclidean).unwrap(), f64::INFINITY);
    }

    #[test]
    fn export_round_trip() {
        let a = interval_grid();
        let e = a.export();
        let json = serde_json::to_string(&e).unwrap();
        let back: GridSetExport = serde_json::from_str(&json).unwrap();
        assert_eq!(GridSet::import(&back).unwrap(), a);
    }
}
