//! Density convergence of `u(T, x*)` measured by the L¹ distance between
//! Gaussian kernel density estimates. Levels use independent samples: level
//! `ℓ` draws sample indices `ℓ·M .. (ℓ+1)·M` and the reference the next block.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_horizon, check_point, check_samples, run_samples, stats, Model};
use crate::error::{Error, Result};
use crate::grid::SpectralBasis;
use crate::noise::generate;
use crate::solver::evolve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityPlan {
    pub levels: Vec<usize>,
    pub reference: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub samples: usize,
    /// Snapped to the nearest node of each grid.
    pub x_star: f64,
    pub grid_points: usize,
    /// Largest tolerated relative increase for the single allowed adjacent
    /// violation of monotone decrease.
    pub violation_tolerance: f64,
}

impl Default for DensityPlan {
    fn default() -> Self {
        Self {
            levels: vec![4, 8, 16],
            reference: 64,
            m: 512,
            t_final: 0.1,
            samples: 5000,
            x_star: PI / 2.0,
            grid_points: 512,
            violation_tolerance: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub levels: Vec<usize>,
    pub reference: usize,
    pub distances: Vec<f64>,
    pub bandwidths: Vec<f64>,
    pub reference_bandwidth: f64,
    pub means: Vec<f64>,
    pub reference_mean: f64,
    pub violations: usize,
    pub samples: usize,
    pub discarded: usize,
    pub pass: bool,
}

impl DensityReport {
    pub fn summary(&self) -> String {
        let d: Vec<String> = self.distances.iter().map(|d| format!("{d:.4}")).collect();
        format!(
            "density: L1 distances [{}], {} adjacent violation(s) -> {}",
            d.join(", "),
            self.violations,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Counts increases along `d`; passes when there is at most one and it is
/// within `tolerance` relative to its predecessor.
pub fn monotone_with_tolerance(d: &[f64], tolerance: f64) -> (usize, bool) {
    let ups: Vec<f64> = d.windows(2).filter(|w| w[1] > w[0]).map(|w| w[1] / w[0] - 1.0).collect();
    let ok = ups.len() <= 1 && ups.iter().all(|&r| r <= tolerance);
    (ups.len(), ok)
}

fn level_samples(model: &Model, plan: &DensityPlan, n: usize, block: u64, seed: u64) -> Result<(Vec<f64>, usize)> {
    let cfg = model.config(n, plan.m, plan.t_final);
    let basis = SpectralBasis::new(n)?;
    let node = basis.mesh().nearest_node(plan.x_star);
    let offset = block * plan.samples as u64;
    run_samples(plan.samples, |s| {
        let master = generate(seed, offset + s, plan.m, plan.reference, plan.t_final)?;
        let sheet = master.coarsen(1, plan.reference / n)?;
        let u = evolve(&cfg, &basis, &sheet.to_beta(), |_, _| {})?;
        Ok(u[node - 1])
    })
}

pub fn density_study(plan: &DensityPlan, model: &Model, seed: u64) -> Result<DensityReport> {
    if plan.levels.is_empty()
        || plan.levels.iter().any(|&n| n < 2 || n >= plan.reference || !plan.reference.is_multiple_of(n))
    {
        return Err(Error::invalid("density: levels must divide and be below the reference"));
    }
    check_samples("density", plan.samples, 50)?;
    check_horizon("density", plan.t_final)?;
    check_point("density", plan.x_star)?;
    model.validate()?;
    let mut discarded = 0;
    let mut sets = Vec::with_capacity(plan.levels.len());
    for (l, &n) in plan.levels.iter().enumerate() {
        let (v, d) = level_samples(model, plan, n, l as u64, seed)?;
        discarded += d;
        sets.push(v);
    }
    let (reference, d) = level_samples(model, plan, plan.reference, plan.levels.len() as u64, seed)?;
    discarded += d;

    let mut views: Vec<&[f64]> = sets.iter().map(|s| s.as_slice()).collect();
    views.push(&reference);
    let grid = stats::common_grid(&views, plan.grid_points)?;
    let reference_bandwidth = stats::silverman_bandwidth(&reference)?;
    let reference_density = stats::kde(&reference, reference_bandwidth, &grid);
    let mut distances = Vec::new();
    let mut bandwidths = Vec::new();
    for s in &sets {
        let bw = stats::silverman_bandwidth(s)?;
        distances.push(stats::l1_trapezoid(&stats::kde(s, bw, &grid), &reference_density, &grid));
        bandwidths.push(bw);
    }
    let (violations, monotone) = monotone_with_tolerance(&distances, plan.violation_tolerance);
    Ok(DensityReport {
        levels: plan.levels.clone(),
        reference: plan.reference,
        distances,
        bandwidths,
        reference_bandwidth,
        means: sets.iter().map(|s| stats::mean(s)).collect(),
        reference_mean: stats::mean(&reference),
        violations,
        samples: plan.samples,
        discarded,
        pass: monotone && discarded == 0,
    })
}
