//! Spatial lookups shared by the density estimator, the connectivity routine
//! and level-set membership: a sorted line for one-dimensional data and a
//! uniform cell grid otherwise.

use std::collections::HashMap;

use crate::density::Dataset;

/// Points of a one-dimensional dataset sorted by coordinate.
#[derive(Debug, Clone)]
pub(crate) struct SortedLine {
    /// Dataset indices in coordinate order.
    pub order: Vec<usize>,
    /// Coordinates in the same order.
    pub keys: Vec<f64>,
}

impl SortedLine {
    pub fn new(data: &Dataset, subset: Option<&[usize]>) -> Self {
        let mut order: Vec<usize> = match subset {
            Some(s) => s.to_vec(),
            None => (0..data.len()).collect(),
        };
        order.sort_by(|&a, &b| data.point(a)[0].total_cmp(&data.point(b)[0]).then(a.cmp(&b)));
        let keys = order.iter().map(|&i| data.point(i)[0]).collect();
        Self { order, keys }
    }

    /// Positions `lo..hi` (into `order`) of all points `x` with `|q − x| / scale ≤ 1`.
    pub fn window(&self, q: f64, scale: f64) -> std::ops::Range<usize> {
        let mid = self.keys.partition_point(|&x| x < q);
        let lo = self.keys[..mid].partition_point(|&x| (q - x) / scale > 1.0);
        let hi = mid + self.keys[mid..].partition_point(|&x| (x - q) / scale <= 1.0);
        lo..hi
    }
}

/// Uniform grid of axis-aligned cells holding point indices.
#[derive(Debug, Clone)]
pub(crate) struct CellGrid {
    pub side: f64,
    pub dim: usize,
    pub cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl CellGrid {
    pub fn new(data: &Dataset, subset: Option<&[usize]>, side: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let mut insert = |i: usize| {
            let key = cell_key(data.point(i), side);
            cells.entry(key).or_default().push(i);
        };
        match subset {
            Some(s) => s.iter().copied().for_each(&mut insert),
            None => (0..data.len()).for_each(&mut insert),
        }
        Self {
            side,
            dim: data.dim(),
            cells,
        }
    }

    pub fn key(&self, p: &[f64]) -> Vec<i64> {
        cell_key(p, self.side)
    }

    /// Calls `visit` with the index list of every non-empty cell whose key
    /// differs from `center` by at most `range` in every coordinate.
    pub fn for_each_nearby<F: FnMut(&[usize])>(&self, center: &[i64], range: i64, mut visit: F) {
        for offset in offsets(self.dim, range) {
            let key: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
            if let Some(members) = self.cells.get(&key) {
                visit(members);
            }
        }
    }
}

pub(crate) fn cell_key(p: &[f64], side: f64) -> Vec<i64> {
    p.iter().map(|x| (x / side).floor() as i64).collect()
}

/// All integer vectors in `[-range, range]^dim`.
pub(crate) fn offsets(dim: usize, range: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-range..=range).map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o);
                    v
                })
            })
            .collect();
    }
    out
}
