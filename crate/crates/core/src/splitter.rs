//! Generic first-split detection over a decreasing family of level-set
//! estimates.
//!
//! Starting at `ρ0`, the level is raised in steps of `ε` while the estimate at
//! the current level has exactly one τ-component that survives to level
//! `ρ + 2ε`. Once that count differs from one, the level is raised by another
//! `2ε` and the surviving components are counted again: two or more mean a
//! split, otherwise the start level is returned.

use serde::{Deserialize, Serialize};

use crate::connectivity::{ComponentFinder, ComponentPartition, EdgeRule};
use crate::error::{Error, Result};
use crate::levelset::KdeLevelFamily;

/// A decreasing family of sample-index sets `ρ ↦ active(ρ)`.
pub trait NestedFamily {
    /// Active sample indices at level `ρ`, ascending.
    fn active(&self, rho: f64) -> Vec<usize>;
    /// Level above which every active set is empty.
    fn max_level(&self) -> f64;
}

/// Component routine applied to an active set.
pub trait ComponentCounter {
    fn components(&self, active: &[usize]) -> ComponentPartition;
}

impl NestedFamily for KdeLevelFamily<'_> {
    fn active(&self, rho: f64) -> Vec<usize> {
        KdeLevelFamily::active(self, rho)
    }

    fn max_level(&self) -> f64 {
        self.max_value()
    }
}

impl ComponentCounter for ComponentFinder<'_> {
    fn components(&self, active: &[usize]) -> ComponentPartition {
        ComponentFinder::components(self, active)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitterParams {
    pub tau: f64,
    pub epsilon: f64,
    pub rho0: f64,
    /// Termination guard; defaults to `max level + 5ε`.
    pub rho_cap: Option<f64>,
}

impl SplitterParams {
    pub fn new(tau: f64, epsilon: f64, rho0: f64) -> Self {
        Self {
            tau,
            epsilon,
            rho0,
            rho_cap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::param("tau", "must be positive and finite"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::param("epsilon", "must be positive and finite"));
        }
        if !(self.rho0 >= 0.0) || !self.rho0.is_finite() {
            return Err(Error::param("rho0", "must be non-negative and finite"));
        }
        if let Some(cap) = self.rho_cap {
            if !(cap > self.rho0) {
                return Err(Error::param("rho_cap", "must exceed rho0"));
            }
        }
        Ok(())
    }
}

/// Result of a splitter run. A split carries at least two disjoint
/// components; no split carries the whole active set at `ρ0` as its only
/// entry of `components`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub split: bool,
    pub rho_out: f64,
    pub components: Vec<Vec<usize>>,
    /// Every visited `(ρ, M)`, including the final recount.
    pub trace: Vec<(f64, usize)>,
}

impl ClusterOutput {
    /// The set returned alongside `ρ0` when there is no split.
    pub fn base_set(&self) -> Option<&[usize]> {
        (!self.split).then(|| self.components.first().map_or(&[][..], Vec::as_slice))
    }
}

/// The τ-components of `active(ρ)` that meet `active(ρ_high)`.
pub fn filtered_components<F, C>(family: &F, counter: &C, rho: f64, rho_high: f64) -> Vec<Vec<usize>>
where
    F: NestedFamily + ?Sized,
    C: ComponentCounter + ?Sized,
{
    let partition = counter.components(&family.active(rho));
    let mut keep = vec![false; partition.count()];
    for i in family.active(rho_high) {
        // Nested family: every high-level index is active at ρ.
        if let Some(label) = partition.label_of(i) {
            keep[label] = true;
        }
    }
    partition
        .members
        .into_iter()
        .zip(keep)
        .filter_map(|(m, k)| k.then_some(m))
        .collect()
}

pub fn run_generic<F, C>(family: &F, params: &SplitterParams, counter: &C) -> Result<ClusterOutput>
where
    F: NestedFamily + ?Sized,
    C: ComponentCounter + ?Sized,
{
    params.validate()?;
    let eps = params.epsilon;
    let cap = params.rho_cap.unwrap_or(family.max_level() + 5.0 * eps);
    // Levels as ρ0 + kε with integer k, so the trace is an exact grid.
    let level = |k: usize| params.rho0 + k as f64 * eps;
    let mut trace = Vec::new();
    let mut k = 0usize;
    loop {
        let rho = level(k);
        if rho > cap {
            return Err(Error::LevelCapExceeded {
                cap,
                level: rho,
                steps: trace.len(),
            });
        }
        let m = filtered_components(family, counter, rho, level(k + 2)).len();
        trace.push((rho, m));
        k += 1;
        if m != 1 {
            break;
        }
    }
    k += 2;
    let rho = level(k);
    let components = filtered_components(family, counter, rho, level(k + 2));
    trace.push((rho, components.len()));
    if components.len() > 1 {
        Ok(ClusterOutput {
            split: true,
            rho_out: rho,
            components,
            trace,
        })
    } else {
        Ok(ClusterOutput {
            split: false,
            rho_out: params.rho0,
            components: vec![family.active(params.rho0)],
            trace,
        })
    }
}

/// Runs the splitter on KDE level sets with the component threshold given
/// by `rule` (`σ + τ` by default).
pub fn run_kde(family: &KdeLevelFamily<'_>, params: &SplitterParams, rule: EdgeRule) -> Result<ClusterOutput> {
    let finder = ComponentFinder::new(family.data, rule.threshold(family.sigma, params.tau), family.kernel.norm);
    run_generic(family, params, &finder)
}
