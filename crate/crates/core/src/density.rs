//! The kernel density estimator `h_{D,δ}`, its infinite-sample counterpart
//! `h_{P,δ}` for analytic densities, and sup-norm distance measurement.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, NormKind};
use crate::quad;
use crate::spatial::{CellGrid, SortedLine};

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    coords: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dataset("dimension must be at least 1".into()));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::Dataset(format!(
                "{} coordinates do not form a non-empty set of {dim}-dimensional points",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::Dataset(format!("non-finite coordinate in row {}", pos / dim)));
        }
        Ok(Self { coords, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Dataset(format!(
                "row {bad} has {} columns, expected {dim}",
                rows[bad].len()
            )));
        }
        Self::new(rows.concat(), dim)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn bounding_box(&self) -> BoxRegion {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        BoxRegion { lo, hi }
    }

    /// Reads a CSV file with one point per row. A single leading header row
    /// is skipped when its first field does not parse as a number.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::Dataset(format!("line {}: {e}", line + 1))),
            }
        }
        if rows.is_empty() {
            return Err(Error::Dataset("no data rows".into()));
        }
        Self::from_rows(&rows)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        let header: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
        wtr.write_record(&header)?;
        for p in self.points() {
            wtr.write_record(p.iter().map(|x| format!("{x:?}")))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Axis-aligned box `[lo_1, hi_1] × … × [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::param("box", "corner dimensions differ or are zero"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::param("box", "requires finite lo ≤ hi in every coordinate"));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn expanded(&self, margin: f64) -> Self {
        Self {
            lo: self.lo.iter().map(|a| a - margin).collect(),
            hi: self.hi.iter().map(|b| b + margin).collect(),
        }
    }

    pub fn intersect(&self, other: &BoxRegion) -> Option<Self> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        lo.iter().zip(&hi).all(|(a, b)| a <= b).then_some(Self { lo, hi })
    }
}

/// A density on `R^d` known in closed form.
pub trait AnalyticDensity: Sync {
    fn dim(&self) -> usize;
    fn density(&self, x: &[f64]) -> f64;
    /// A box outside of which the density vanishes.
    fn support(&self) -> BoxRegion;
    /// `‖h‖∞`.
    fn sup_norm(&self) -> f64;
    /// Coordinates along `axis` where the density fails to be smooth.
    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let _ = axis;
        Vec::new()
    }
}

#[inline]
fn normalization(n: usize, delta: f64, dim: usize) -> f64 {
    n as f64 * delta.powi(dim as i32)
}

/// `h_{D,δ}(q) = (n δ^d)^{-1} Σ_i K((q − x_i)/δ)`, summed in sample order.
pub fn kde_eval(data: &Dataset, kernel: &Kernel, delta: f64, query: &[f64]) -> f64 {
    debug_assert_eq!(query.len(), data.dim());
    let mut sum = 0.0;
    for p in data.points() {
        sum += kernel.radial(kernel.norm.distance(query, p) / delta);
    }
    sum / normalization(data.len(), delta, data.dim())
}

/// KDE values at every sample together with how they were computed.
#[derive(Debug, Clone, Serialize)]
pub struct SampleDensities {
    pub values: Vec<f64>,
    pub accelerated: bool,
    /// For unbounded kernels on the accelerated path: terms with
    /// `‖x − x_i‖ > cutoff_radius` (where `K_δ < 1e-16`) are skipped.
    pub cutoff_radius: Option<f64>,
}

/// Reference `O(n² d)` evaluation at the samples.
pub fn kde_eval_at_samples_reference(data: &Dataset, kernel: &Kernel, delta: f64) -> Vec<f64> {
    data.points().map(|p| kde_eval(data, kernel, delta, p)).collect()
}

/// Evaluation at the samples through a spatial index. Bit-identical to the
/// reference for bounded-support kernels.
pub fn kde_eval_at_samples(data: &Dataset, kernel: &Kernel, delta: f64) -> SampleDensities {
    let index = KdeIndex::new(data, kernel, delta);
    let values = data.points().map(|p| index.eval(p)).collect();
    SampleDensities {
        values,
        accelerated: true,
        cutoff_radius: index.cutoff_radius,
    }
}

enum Lookup {
    Line(SortedLine),
    Cells(CellGrid),
}

/// Spatial index answering repeated KDE queries for a fixed `(D, K, δ)`.
pub struct KdeIndex<'a> {
    data: &'a Dataset,
    kernel: &'a Kernel,
    delta: f64,
    /// Search radius in the norm of the kernel.
    radius: f64,
    cutoff_radius: Option<f64>,
    lookup: Lookup,
    /// `rect_sums[k]` = `c + c + … + c` (k terms, summed left to right).
    rect_sums: Option<Vec<f64>>,
    denom: f64,
}

impl<'a> KdeIndex<'a> {
    pub fn new(data: &'a Dataset, kernel: &'a Kernel, delta: f64) -> Self {
        let dim = data.dim();
        let (radius, cutoff_radius) = if kernel.bounded_support() {
            (delta, None)
        } else {
            // Smallest r with K_δ(r) < 1e-16: c k(r/δ) δ^{-d} < 1e-16.
            let target = 1e-16 * delta.powi(dim as i32);
            let mut r = 1.0;
            while kernel.radial(r) >= target && r < kernel.support_radius() {
                r *= 1.05;
            }
            (r * delta, Some(r * delta))
        };
        let lookup = if dim == 1 {
            Lookup::Line(SortedLine::new(data, None))
        } else {
            // Slightly wider cells so that rounding in the key computation
            // cannot push a neighbour two cells away.
            Lookup::Cells(CellGrid::new(data, None, radius * (1.0 + 1e-9)))
        };
        let rect_sums = (kernel.profile == crate::Profile::Rectangular).then(|| {
            let mut sums = Vec::with_capacity(data.len() + 1);
            let mut s = 0.0;
            sums.push(s);
            for _ in 0..data.len() {
                s += kernel.normalizer;
                sums.push(s);
            }
            sums
        });
        Self {
            data,
            kernel,
            delta,
            radius,
            cutoff_radius,
            lookup,
            rect_sums,
            denom: normalization(data.len(), delta, dim),
        }
    }

    pub fn cutoff_radius(&self) -> Option<f64> {
        self.cutoff_radius
    }

    /// Indices (ascending) of samples within the search radius of `q`.
    fn neighbours(&self, q: &[f64], out: &mut Vec<usize>) {
        out.clear();
        match &self.lookup {
            Lookup::Line(line) => {
                let w = line.window(q[0], self.radius);
                out.extend_from_slice(&line.order[w]);
            }
            Lookup::Cells(grid) => {
                let key = grid.key(q);
                let norm = self.kernel.norm;
                grid.for_each_nearby(&key, 1, |members| {
                    for &i in members {
                        if norm.distance(q, self.data.point(i)) / self.radius <= 1.0 {
                            out.push(i);
                        }
                    }
                });
            }
        }
        out.sort_unstable();
    }

    pub fn eval(&self, q: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.eval_with(q, &mut buf)
    }

    fn eval_with(&self, q: &[f64], buf: &mut Vec<usize>) -> f64 {
        if let (Some(sums), Lookup::Line(line)) = (&self.rect_sums, &self.lookup) {
            // The window test is the kernel's own `|q − x|/δ ≤ 1`.
            return sums[line.window(q[0], self.delta).len()] / self.denom;
        }
        self.neighbours(q, buf);
        let sum = match &self.rect_sums {
            // Only samples with ‖q − x_i‖/δ ≤ 1 contribute, each exactly c.
            Some(sums) => {
                let norm = self.kernel.norm;
                let count = buf
                    .iter()
                    .filter(|&&i| norm.distance(q, self.data.point(i)) / self.delta <= 1.0)
                    .count();
                sums[count]
            }
            None => {
                let mut s = 0.0;
                for &i in buf.iter() {
                    s += self
                        .kernel
                        .radial(self.kernel.norm.distance(q, self.data.point(i)) / self.delta);
                }
                s
            }
        };
        sum / self.denom
    }

    pub fn eval_many(&self, queries: &[Vec<f64>]) -> Vec<f64> {
        let mut buf = Vec::new();
        queries.iter().map(|q| self.eval_with(q, &mut buf)).collect()
    }
}

/// Truncation radius (in units of δ) for integrating against the kernel.
fn kernel_reach(kernel: &Kernel) -> f64 {
    match kernel.profile {
        crate::Profile::Gaussian => 6.5,
        crate::Profile::Laplacian => 40.0,
        _ => 1.0,
    }
}

/// Relative tolerance of [`smoothed_density`].
pub const SMOOTHED_REL_TOL: f64 = 1e-4;

/// `h_{P,δ}(q) = δ^{-d} ∫ K((q − y)/δ) h(y) dy` by adaptive quadrature
/// (d ≤ 2) or quasi-Monte-Carlo (d ≥ 3).
pub fn smoothed_density<D: AnalyticDensity + ?Sized>(
    truth: &D,
    kernel: &Kernel,
    delta: f64,
    query: &[f64],
) -> Result<f64> {
    let dim = truth.dim();
    if dim != kernel.dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: kernel.dim,
        });
    }
    let reach = kernel_reach(kernel) * delta;
    let window = BoxRegion {
        lo: query.iter().map(|q| q - reach).collect(),
        hi: query.iter().map(|q| q + reach).collect(),
    };
    let Some(domain) = window.intersect(&truth.support()) else {
        return Ok(0.0);
    };
    let scale = delta.powi(dim as i32);
    let abs_tol = 1e-9 * truth.sup_norm().max(1.0);
    let integral = match dim {
        1 => {
            let mut breaks = vec![domain.lo[0], domain.hi[0], query[0]];
            if kernel.bounded_support() {
                breaks.extend([query[0] - delta, query[0] + delta]);
            }
            breaks.extend(truth.breakpoints(0));
            let breaks = clip_sorted(breaks, domain.lo[0], domain.hi[0]);
            let r = quad::integrate_pieces(
                |y| kernel.radial((query[0] - y).abs() / delta) * truth.density(&[y]),
                &breaks,
                SMOOTHED_REL_TOL * 1e-2,
                abs_tol,
                4000,
            );
            check(r, abs_tol)?
        }
        2 => integrate_2d(truth, kernel, delta, query, &domain, abs_tol)?,
        _ => integrate_qmc(truth, kernel, delta, query, &domain)?,
    };
    Ok((integral / scale).max(0.0))
}

fn check(r: quad::Integral, abs_tol: f64) -> Result<f64> {
    if r.converged(SMOOTHED_REL_TOL, abs_tol) {
        Ok(r.value)
    } else {
        Err(Error::Quadrature {
            requested: SMOOTHED_REL_TOL,
            achieved: r.abs_error / r.value.abs().max(f64::MIN_POSITIVE),
        })
    }
}

fn clip_sorted(mut v: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    for x in v.iter_mut() {
        *x = x.clamp(lo, hi);
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Iterated integration whose inner rule breaks at the kernel-ball boundary.
fn integrate_2d<D: AnalyticDensity + ?Sized>(
    truth: &D,
    kernel: &Kernel,
    delta: f64,
    q: &[f64],
    domain: &BoxRegion,
    abs_tol: f64,
) -> Result<f64> {
    let bounded = kernel.bounded_support();
    let euclid = kernel.norm == NormKind::Euclidean;
    let mut outer_breaks = vec![domain.lo[0], domain.hi[0], q[0]];
    outer_breaks.extend(truth.breakpoints(0));
    if bounded {
        outer_breaks.extend([q[0] - delta, q[0] + delta]);
    }
    let outer_breaks = clip_sorted(outer_breaks, domain.lo[0], domain.hi[0]);
    let y_density_breaks = truth.breakpoints(1);
    let mut worst: Option<quad::Integral> = None;
    let outer = quad::integrate_pieces(
        |x| {
            let dx = x - q[0];
            let mut breaks = vec![domain.lo[1], domain.hi[1], q[1]];
            breaks.extend(y_density_breaks.iter().copied());
            if bounded {
                let half = if euclid {
                    (delta * delta - dx * dx).max(0.0).sqrt()
                } else {
                    delta
                };
                breaks.extend([q[1] - half, q[1] + half]);
            }
            let breaks = clip_sorted(breaks, domain.lo[1], domain.hi[1]);
            let r = quad::integrate_pieces(
                |y| kernel.radial(kernel.norm.norm(&[dx, y - q[1]]) / delta) * truth.density(&[x, y]),
                &breaks,
                SMOOTHED_REL_TOL * 1e-2,
                abs_tol * 1e-2,
                1000,
            );
            if !r.converged(SMOOTHED_REL_TOL * 1e-2, abs_tol * 1e-2)
                && worst.is_none_or(|w| r.abs_error > w.abs_error)
            {
                worst = Some(r);
            }
            r.value
        },
        &outer_breaks,
        SMOOTHED_REL_TOL * 1e-2,
        abs_tol,
        1000,
    );
    let value = check(outer, abs_tol)?;
    if let Some(w) = worst {
        check(w, abs_tol.max(SMOOTHED_REL_TOL * value.abs()))?;
    }
    Ok(value)
}

fn integrate_qmc<D: AnalyticDensity + ?Sized>(
    truth: &D,
    kernel: &Kernel,
    delta: f64,
    q: &[f64],
    domain: &BoxRegion,
) -> Result<f64> {
    let dim = q.len();
    let volume = domain.volume();
    let mut u = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let mut sum = 0.0;
    let mut count: u64 = 0;
    let mut previous = f64::NAN;
    let mut batch: u64 = 1 << 12;
    while count < 1 << 24 {
        for i in count..count + batch {
            quad::halton(i, dim, &mut u);
            for k in 0..dim {
                x[k] = domain.lo[k] + u[k] * (domain.hi[k] - domain.lo[k]);
            }
            let diff: Vec<f64> = x.iter().zip(q).map(|(a, b)| a - b).collect();
            sum += kernel.eval(&diff.iter().map(|v| v / delta).collect::<Vec<_>>()) * truth.density(&x);
        }
        count += batch;
        let estimate = volume * sum / count as f64;
        if previous.is_finite() && (estimate - previous).abs() <= SMOOTHED_REL_TOL * estimate.abs().max(1e-12) {
            return Ok(estimate);
        }
        previous = estimate;
        batch = count;
    }
    Err(Error::Quadrature {
        requested: SMOOTHED_REL_TOL,
        achieved: f64::NAN,
    })
}

/// Regular grid of probe points over a box, spacing at most `max_spacing`.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeGrid {
    pub region: BoxRegion,
    pub spacing: Vec<f64>,
    #[serde(skip)]
    pub points: Vec<Vec<f64>>,
}

impl ProbeGrid {
    pub fn new(region: BoxRegion, max_spacing: f64) -> Result<Self> {
        if !(max_spacing > 0.0) {
            return Err(Error::param("max_spacing", "must be positive"));
        }
        let counts: Vec<usize> = region
            .lo
            .iter()
            .zip(&region.hi)
            .map(|(a, b)| ((b - a) / max_spacing).ceil().max(1.0) as usize + 1)
            .collect();
        let total: usize = counts.iter().product();
        if total > 10_000_000 {
            return Err(Error::Grid(format!("probe grid would have {total} nodes")));
        }
        let spacing: Vec<f64> = region
            .lo
            .iter()
            .zip(&region.hi)
            .zip(&counts)
            .map(|((a, b), c)| (b - a) / (*c as f64 - 1.0))
            .collect();
        let mut points = Vec::with_capacity(total);
        let mut idx = vec![0usize; counts.len()];
        for _ in 0..total {
            points.push(
                idx.iter()
                    .enumerate()
                    .map(|(k, &i)| region.lo[k] + i as f64 * spacing[k])
                    .collect(),
            );
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(Self {
            region,
            spacing,
            points,
        })
    }

    /// Probe grid over the support of `truth` widened by the kernel reach,
    /// with spacing `δ/4`.
    pub fn for_truth<D: AnalyticDensity + ?Sized>(truth: &D, kernel: &Kernel, delta: f64) -> Result<Self> {
        let region = truth.support().expanded(kernel_reach(kernel) * delta);
        Self::new(region, delta / 4.0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `h_{P,δ}` tabulated on a probe grid, reusable across datasets.
#[derive(Debug, Clone)]
pub struct SmoothedReference {
    pub grid: ProbeGrid,
    pub delta: f64,
    pub values: Vec<f64>,
}

impl SmoothedReference {
    pub fn new<D: AnalyticDensity + ?Sized>(truth: &D, kernel: &Kernel, delta: f64, grid: ProbeGrid) -> Result<Self> {
        let values = grid
            .points
            .iter()
            .map(|p| smoothed_density(truth, kernel, delta, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, delta, values })
    }

    /// `max_grid |h_{D,δ} − h_{P,δ}|`.
    pub fn sup_distance(&self, data: &Dataset, kernel: &Kernel) -> f64 {
        let index = KdeIndex::new(data, kernel, self.delta);
        index
            .eval_many(&self.grid.points)
            .iter()
            .zip(&self.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Sup-norm distance between `h_{D,δ}` and `h_{P,δ}` measured on a probe grid.
#[derive(Debug, Clone, Serialize)]
pub struct SupDistance {
    pub value: f64,
    pub grid_spacing: Vec<f64>,
    pub probes: usize,
}

pub fn sup_distance<D: AnalyticDensity + ?Sized>(
    data: &Dataset,
    truth: &D,
    kernel: &Kernel,
    delta: f64,
    grid: &ProbeGrid,
) -> Result<SupDistance> {
    let index = KdeIndex::new(data, kernel, delta);
    let mut value: f64 = 0.0;
    for p in &grid.points {
        let diff = (index.eval(p) - smoothed_density(truth, kernel, delta, p)?).abs();
        value = value.max(diff);
    }
    Ok(SupDistance {
        value,
        grid_spacing: grid.spacing.clone(),
        probes: grid.len(),
    })
}

/// `max_i |h_{D,δ}(x_i) − h_{P,δ}(x_i)|` over the samples themselves.
pub fn sup_distance_at_samples<D: AnalyticDensity + ?Sized>(
    data: &Dataset,
    truth: &D,
    kernel: &Kernel,
    delta: f64,
    estimates: &[f64],
) -> Result<f64> {
    let mut value: f64 = 0.0;
    for (p, est) in data.points().zip(estimates) {
        value = value.max((est - smoothed_density(truth, kernel, delta, p)?).abs());
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Profile;
    use approx::assert_relative_eq;

    struct Uniform01;
    impl AnalyticDensity for Uniform01 {
        fn dim(&self) -> usize {
            1
        }
        fn density(&self, x: &[f64]) -> f64 {
            f64::from(u8::from((0.0..=1.0).contains(&x[0])))
        }
        fn support(&self) -> BoxRegion {
            BoxRegion::new(vec![0.0], vec![1.0]).unwrap()
        }
        fn sup_norm(&self) -> f64 {
            1.0
        }
        fn breakpoints(&self, _: usize) -> Vec<f64> {
            vec![0.0, 1.0]
        }
    }

    fn kern(p: Profile, d: usize) -> Kernel {
        Kernel::new(p, d, NormKind::Euclidean).unwrap()
    }

    #[test]
    fn kde_examples() {
        let rect = kern(Profile::Rectangular, 1);
        let one = Dataset::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(kde_eval(&one, &rect, 1.0, &[0.0]), 0.5);
        let two = Dataset::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        assert_eq!(kde_eval(&two, &rect, 0.5, &[0.0]), 0.0);
        let gauss = kern(Profile::Gaussian, 1);
        let d = Dataset::from_rows(&[vec![0.0], vec![0.2]]).unwrap();
        let c = gauss.normalizer;
        assert_relative_eq!(
            kde_eval(&d, &gauss, 0.1, &[0.0]),
            0.5 * (10.0 * c + 10.0 * c * (-4.0f64).exp()),
            max_relative = 1e-14
        );
    }

    #[test]
    fn smoothed_uniform_examples() {
        let rect = kern(Profile::Rectangular, 1);
        assert_relative_eq!(smoothed_density(&Uniform01, &rect, 0.1, &[0.5]).unwrap(), 1.0, max_relative = 1e-10);
        assert_relative_eq!(smoothed_density(&Uniform01, &rect, 0.1, &[0.0]).unwrap(), 0.5, max_relative = 1e-10);
        assert_eq!(smoothed_density(&Uniform01, &rect, 0.1, &[3.0]).unwrap(), 0.0);
    }

    #[test]
    fn csv_round_trip_and_header() {
        let text = "a,b\n1.0,2.0\n3.5,-1\n";
        let d = Dataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.point(1), &[3.5, -1.0]);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), d);
        assert!(Dataset::read_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("1,2\nx,3\n".as_bytes()).is_err());
    }

    #[test]
    fn accelerated_matches_reference_in_two_dims() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random(), rng.random()]).collect();
        let d = Dataset::from_rows(&rows).unwrap();
        for profile in [Profile::Rectangular, Profile::Epanechnikov, Profile::Tricube] {
            for norm in [NormKind::Euclidean, NormKind::Supremum] {
                let k = Kernel::new(profile, 2, norm).unwrap();
                assert_eq!(
                    kde_eval_at_samples(&d, &k, 0.1).values,
                    kde_eval_at_samples_reference(&d, &k, 0.1)
                );
            }
        }
    }
}
