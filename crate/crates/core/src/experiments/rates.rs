//! Coupled strong-error studies in space and in time.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    check_coupling, check_horizon, check_ladder, check_point, check_samples, run_samples, Model, RateReport, Window,
};
use crate::error::{Error, Result};
use crate::grid::SpectralBasis;
use crate::noise::{generate, SheetIncrements};
use crate::solver::{evolve, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialRatePlan {
    pub levels: Vec<usize>,
    pub reference: usize,
    /// Common time grid for every level.
    pub m: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub samples: usize,
    /// Moment order of the error norm.
    pub p: f64,
    pub x_star: f64,
    pub slope_window: Window,
    pub min_r2: f64,
}

impl Default for SpatialRatePlan {
    fn default() -> Self {
        Self {
            levels: vec![4, 8, 16, 32],
            reference: 64,
            m: 512,
            t_final: 0.1,
            samples: 400,
            p: 2.0,
            x_star: PI / 2.0,
            slope_window: Window::between(-1.35, -0.75),
            min_r2: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalRatePlan {
    pub n: usize,
    /// Ladder of step counts.
    pub levels: Vec<usize>,
    pub reference: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub samples: usize,
    pub p: f64,
    pub x_star: f64,
    pub slope_window: Window,
    pub min_r2: f64,
}

impl Default for TemporalRatePlan {
    fn default() -> Self {
        Self {
            n: 32,
            levels: vec![4, 8, 16, 32, 64],
            reference: 4096,
            t_final: 0.1,
            samples: 400,
            p: 2.0,
            x_star: PI / 2.0,
            slope_window: Window::between(-0.55, -0.25),
            min_r2: 0.9,
        }
    }
}

fn check_moment(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("moment order p must be >= 1, got {p}")));
    }
    Ok(())
}

/// Terminal value at `x*` of the scheme on `sheet`.
fn terminal_value(config: &SolverConfig, basis: &SpectralBasis, sheet: &SheetIncrements, x: f64) -> Result<f64> {
    let u = evolve(config, basis, &sheet.to_beta(), |_, _| {})?;
    Ok(basis.mesh().interpolate(&u, x))
}

/// Per-level errors `(E|u_level - u_ref|^p)^{1/p}` from per-sample differences.
fn reduce(diffs: &[Vec<f64>], levels: usize, p: f64) -> (Vec<f64>, Vec<f64>) {
    (0..levels)
        .map(|l| {
            let col: Vec<f64> = diffs.iter().map(|d| d[l]).collect();
            super::stats::lp_norm_with_error(&col, p)
        })
        .unzip()
}

/// Spatial strong error: all levels share `m`, each level's noise is the
/// spatial aggregation of the sample's master sheet at `(m, n_ref)`.
pub fn spatial_rate_study(plan: &SpatialRatePlan, model: &Model, seed: u64) -> Result<RateReport> {
    check_ladder("rates_space", &plan.levels, plan.reference)?;
    check_samples("rates_space", plan.samples, 50)?;
    check_horizon("rates_space", plan.t_final)?;
    check_point("rates_space", plan.x_star)?;
    check_moment(plan.p)?;
    model.validate()?;
    if plan.m == 0 {
        return Err(Error::invalid("rates_space: m must be >= 1"));
    }
    let ref_cfg = model.config(plan.reference, plan.m, plan.t_final);
    let ref_basis = SpectralBasis::new(plan.reference)?;
    let level_cfgs: Vec<SolverConfig> = plan.levels.iter().map(|&n| model.config(n, plan.m, plan.t_final)).collect();
    let bases = plan.levels.iter().map(|&n| SpectralBasis::new(n)).collect::<Result<Vec<_>>>()?;

    let (diffs, discarded) = run_samples(plan.samples, |s| {
        let master = generate(seed, s, plan.m, plan.reference, plan.t_final)?;
        let reference = terminal_value(&ref_cfg, &ref_basis, &master, plan.x_star)?;
        plan.levels
            .iter()
            .zip(level_cfgs.iter().zip(&bases))
            .map(|(&n, (cfg, basis))| {
                let coarse = master.coarsen(1, plan.reference / n)?;
                check_coupling(&master, &coarse)?;
                Ok(terminal_value(cfg, basis, &coarse, plan.x_star)? - reference)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let (errors, std_errors) = reduce(&diffs, plan.levels.len(), plan.p);
    RateReport::from_errors(
        "rates-space",
        plan.levels.clone(),
        plan.reference,
        errors,
        std_errors,
        plan.slope_window,
        Some(plan.min_r2),
        plan.samples,
        discarded,
    )
}

/// Temporal strong error at fixed `n`: each level's noise is the time
/// aggregation of the sample's master sheet at `(m_ref, n)`.
pub fn temporal_rate_study(plan: &TemporalRatePlan, model: &Model, seed: u64) -> Result<RateReport> {
    check_ladder("rates_time", &plan.levels, plan.reference)?;
    check_samples("rates_time", plan.samples, 50)?;
    check_horizon("rates_time", plan.t_final)?;
    check_point("rates_time", plan.x_star)?;
    check_moment(plan.p)?;
    model.validate()?;
    let basis = SpectralBasis::new(plan.n)?;
    let ref_cfg = model.config(plan.n, plan.reference, plan.t_final);
    let level_cfgs: Vec<SolverConfig> = plan.levels.iter().map(|&m| model.config(plan.n, m, plan.t_final)).collect();

    let (diffs, discarded) = run_samples(plan.samples, |s| {
        let master = generate(seed, s, plan.reference, plan.n, plan.t_final)?;
        let reference = terminal_value(&ref_cfg, &basis, &master, plan.x_star)?;
        plan.levels
            .iter()
            .zip(&level_cfgs)
            .map(|(&m, cfg)| {
                let coarse = master.coarsen(plan.reference / m, 1)?;
                check_coupling(&master, &coarse)?;
                Ok(terminal_value(cfg, &basis, &coarse, plan.x_star)? - reference)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let (errors, std_errors) = reduce(&diffs, plan.levels.len(), plan.p);
    RateReport::from_errors(
        "rates-time",
        plan.levels.clone(),
        plan.reference,
        errors,
        std_errors,
        plan.slope_window,
        Some(plan.min_r2),
        plan.samples,
        discarded,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Diffusion, Drift, InitialData};

    #[test]
    fn reference_self_comparison_is_zero() {
        let model = Model::default();
        let cfg = model.config(16, 32, 0.1);
        let basis = SpectralBasis::new(16).unwrap();
        let master = generate(0, 0, 32, 16, 0.1).unwrap();
        let a = terminal_value(&cfg, &basis, &master, PI / 2.0).unwrap();
        let b = terminal_value(&cfg, &basis, &master.coarsen(1, 1).unwrap(), PI / 2.0).unwrap();
        assert_eq!(a - b, 0.0);
    }

    #[test]
    fn linear_zero_data_is_exact() {
        let model =
            Model { drift: Drift::Zero, diffusion: Diffusion::Constant { c: 0.0 }, initial: InitialData::zero() };
        let plan = SpatialRatePlan { m: 8, samples: 50, ..Default::default() };
        let r = spatial_rate_study(&plan, &model, 0).unwrap();
        assert!(r.exact && r.slope.is_none() && r.pass);
    }

    #[test]
    fn plan_validation() {
        let model = Model::default();
        let bad = SpatialRatePlan { levels: vec![4, 8], ..Default::default() };
        assert!(spatial_rate_study(&bad, &model, 0).is_err());
        let bad = TemporalRatePlan { samples: 10, ..Default::default() };
        assert!(temporal_rate_study(&bad, &model, 0).is_err());
        let bad = TemporalRatePlan { p: 0.5, ..Default::default() };
        assert!(temporal_rate_study(&bad, &model, 0).is_err());
    }
}
