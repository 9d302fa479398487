//! Numerical integration helpers: adaptive Gauss–Kronrod (7/15) in one
//! dimension, an iterated rule for rectangles, and a Halton sequence for
//! quasi-Monte-Carlo in higher dimensions.

use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
}

impl Integral {
    pub fn converged(&self, rel_tol: f64, abs_tol: f64) -> bool {
        self.abs_error <= abs_tol.max(rel_tol * self.value.abs())
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over the union of the
/// intervals between consecutive `breaks` (which must be sorted).
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Integral {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
        });
    }
    let mut count = heap.len();
    while total_err > abs_tol.max(rel_tol * total.abs()) && count < max_segments {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            err: e2,
        });
        count += 1;
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
    Integral { value, abs_error }
}

pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Integral {
    integrate_pieces(f, &[a, b], rel_tol, abs_tol, 2000)
}

/// Iterated adaptive integration over a rectangle. `x_breaks`/`y_breaks`
/// are sorted break points of each axis (including the end points).
pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    x_breaks: &[f64],
    y_breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Integral {
    let mut inner_err = 0.0_f64;
    let outer = integrate_pieces(
        |x| {
            let inner = integrate_pieces(|y| f(x, y), y_breaks, rel_tol * 0.1, abs_tol * 0.1, 400);
            inner_err = inner_err.max(inner.abs_error);
            inner.value
        },
        x_breaks,
        rel_tol,
        abs_tol,
        400,
    );
    let width = x_breaks.last().unwrap_or(&0.0) - x_breaks.first().unwrap_or(&0.0);
    Integral {
        value: outer.value,
        abs_error: outer.abs_error + inner_err * width.abs(),
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in the given prime base.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * factor;
        index /= base;
        factor *= inv;
    }
    value
}

/// The `index`-th Halton point in `[0,1)^dim` (dim ≤ 16).
pub fn halton(index: u64, dim: usize, out: &mut [f64]) {
    for (k, slot) in out.iter_mut().enumerate().take(dim) {
        *slot = radical_inverse(index + 1, PRIMES[k % PRIMES.len()]);
    }
}
