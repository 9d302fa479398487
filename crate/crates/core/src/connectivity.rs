//! τ-connected components of ball-dilated sample sets: union-find over the
//! neighbourhood graph with edges `‖x_i − x_j‖ ≤ threshold`.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::density::Dataset;
use crate::kernels::NormKind;
use crate::spatial::{offsets, CellGrid, SortedLine};

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns whether they were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Which distance between sample points joins their σ-balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeRule {
    /// `‖x_i − x_j‖ ≤ σ + τ`.
    #[default]
    Standard,
    /// `‖x_i − x_j‖ ≤ 2σ + τ`: the balls themselves come within τ.
    Geometric,
}

impl EdgeRule {
    pub fn threshold(self, sigma: f64, tau: f64) -> f64 {
        match self {
            EdgeRule::Standard => sigma + tau,
            EdgeRule::Geometric => 2.0 * sigma + tau,
        }
    }
}

/// Partition of an active index set into components with canonical ids:
/// component `k` is the one whose smallest member is the `k`-th smallest
/// among component minima.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentPartition {
    /// Active indices, ascending.
    pub active: Vec<usize>,
    /// `labels[j]` is the component of `active[j]`.
    pub labels: Vec<usize>,
    /// Sorted member lists, indexed by component id.
    pub members: Vec<Vec<usize>>,
}

impl ComponentPartition {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn label_of(&self, index: usize) -> Option<usize> {
        self.active.binary_search(&index).ok().map(|j| self.labels[j])
    }

    /// Builds the canonical partition from an arbitrary labelling of the
    /// (ascending) `active` list.
    pub fn from_raw_labels(active: Vec<usize>, raw: &[usize]) -> Self {
        debug_assert!(active.windows(2).all(|w| w[0] < w[1]));
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut labels = Vec::with_capacity(active.len());
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (&i, &r) in active.iter().zip(raw) {
            let next = remap.len();
            let id = *remap.entry(r).or_insert(next);
            if id == members.len() {
                members.push(Vec::new());
            }
            members[id].push(i);
            labels.push(id);
        }
        Self {
            active,
            labels,
            members,
        }
    }
}

fn sorted_unique(active: &[usize]) -> Vec<usize> {
    let mut a = active.to_vec();
    a.sort_unstable();
    a.dedup();
    a
}

/// Components of the graph on `active` with edges `‖x_i − x_j‖ ≤ σ + τ`
/// (or `2σ + τ` under [`EdgeRule::Geometric`]).
pub fn tau_components(
    data: &Dataset,
    active: &[usize],
    sigma: f64,
    tau: f64,
    norm: NormKind,
    rule: EdgeRule,
) -> ComponentPartition {
    components_within(data, active, rule.threshold(sigma, tau), norm)
}

/// Components of the threshold graph on `active`, via spatial bucketing.
pub fn components_within(data: &Dataset, active: &[usize], threshold: f64, norm: NormKind) -> ComponentPartition {
    let active = sorted_unique(active);
    if active.is_empty() {
        return ComponentPartition::from_raw_labels(active, &[]);
    }
    if data.dim() == 1 {
        let line = SortedLine::new(data, Some(&active));
        return components_on_line(&line, &active, threshold);
    }
    components_on_grid(data, active, threshold, norm)
}

/// In one dimension the threshold graph's components are the maximal runs of
/// sorted points whose consecutive gaps are at most `threshold`.
fn components_on_line(line: &SortedLine, active: &[usize], threshold: f64) -> ComponentPartition {
    let mut run_of = HashMap::with_capacity(line.order.len());
    let mut run = 0;
    for (pos, &i) in line.order.iter().enumerate() {
        if pos > 0 && (line.keys[pos] - line.keys[pos - 1]).abs() > threshold {
            run += 1;
        }
        run_of.insert(i, run);
    }
    let raw: Vec<usize> = active.iter().map(|i| run_of[i]).collect();
    ComponentPartition::from_raw_labels(active.to_vec(), &raw)
}

fn components_on_grid(data: &Dataset, active: Vec<usize>, threshold: f64, norm: NormKind) -> ComponentPartition {
    let dim = data.dim();
    // Cells small enough that any two points sharing one are adjacent.
    let diameter_factor = match norm {
        NormKind::Euclidean => (dim as f64).sqrt(),
        NormKind::Supremum => 1.0,
    };
    let side = threshold / diameter_factor * (1.0 - 1e-9);
    let range = (threshold / side).ceil() as i64;
    let grid = CellGrid::new(data, Some(&active), side);
    let pos: HashMap<usize, usize> = active.iter().enumerate().map(|(j, &i)| (i, j)).collect();
    let mut uf = UnionFind::new(active.len());
    let mut keys: Vec<&Vec<i64>> = grid.cells.keys().collect();
    keys.sort();
    for key in &keys {
        let members = &grid.cells[*key];
        for w in members.windows(2) {
            uf.union(pos[&w[0]], pos[&w[1]]);
        }
    }
    let offs: Vec<Vec<i64>> = offsets(dim, range)
        .into_iter()
        .filter(|o| o.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0))
        .collect();
    for key in &keys {
        let here = &grid.cells[*key];
        for off in &offs {
            let other: Vec<i64> = key.iter().zip(off).map(|(a, b)| a + b).collect();
            let Some(there) = grid.cells.get(&other) else { continue };
            if uf.find(pos[&here[0]]) == uf.find(pos[&there[0]]) {
                continue;
            }
            'scan: for &i in here {
                for &j in there {
                    if norm.distance(data.point(i), data.point(j)) <= threshold {
                        uf.union(pos[&i], pos[&j]);
                        break 'scan;
                    }
                }
            }
        }
    }
    let raw: Vec<usize> = (0..active.len()).map(|j| uf.find(j)).collect();
    ComponentPartition::from_raw_labels(active, &raw)
}

/// Test oracle: breadth-first search over the explicit adjacency matrix.
pub fn components_bruteforce(data: &Dataset, active: &[usize], threshold: f64, norm: NormKind) -> ComponentPartition {
    let active = sorted_unique(active);
    let m = active.len();
    let adjacent: Vec<Vec<bool>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| a != b && norm.distance(data.point(active[a]), data.point(active[b])) <= threshold)
                .collect()
        })
        .collect();
    let mut raw = vec![usize::MAX; m];
    let mut next = 0;
    for start in 0..m {
        if raw[start] != usize::MAX {
            continue;
        }
        raw[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for b in 0..m {
                if adjacent[a][b] && raw[b] == usize::MAX {
                    raw[b] = next;
                    queue.push_back(b);
                }
            }
        }
        next += 1;
    }
    ComponentPartition::from_raw_labels(active, &raw)
}

/// Reusable component routine for a fixed dataset and threshold, evaluated
/// on many nested active sets. One-dimensional data is sorted once.
#[derive(Debug, Clone)]
pub struct ComponentFinder<'a> {
    data: &'a Dataset,
    threshold: f64,
    norm: NormKind,
    line: Option<SortedLine>,
}

impl<'a> ComponentFinder<'a> {
    pub fn new(data: &'a Dataset, threshold: f64, norm: NormKind) -> Self {
        let line = (data.dim() == 1).then(|| SortedLine::new(data, None));
        Self {
            data,
            threshold,
            norm,
            line,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Components of the ascending index list `active`.
    pub fn components(&self, active: &[usize]) -> ComponentPartition {
        match &self.line {
            Some(line) => {
                let mut member = vec![false; self.data.len()];
                for &i in active {
                    member[i] = true;
                }
                let mut raw = vec![0; self.data.len()];
                let mut run = 0;
                let mut last: Option<f64> = None;
                for (pos, &i) in line.order.iter().enumerate() {
                    if !member[i] {
                        continue;
                    }
                    let x = line.keys[pos];
                    if let Some(prev) = last {
                        if (x - prev).abs() > self.threshold {
                            run += 1;
                        }
                    }
                    last = Some(x);
                    raw[i] = run;
                }
                let active = sorted_unique(active);
                let raw: Vec<usize> = active.iter().map(|&i| raw[i]).collect();
                ComponentPartition::from_raw_labels(active, &raw)
            }
            None => components_within(self.data, active, self.threshold, self.norm),
        }
    }
}
