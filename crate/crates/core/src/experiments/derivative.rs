//! Malliavin derivative studies: convergence of the derivative kernel across
//! spatial levels and statistical nondegeneracy of the H-norm.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    check_coupling, check_horizon, check_ladder, check_point, check_samples, run_samples, stats, Model, RateReport,
    Window,
};
use crate::error::Result;
use crate::grid::SpectralBasis;
use crate::malliavin::{malliavin_distance, negative_moment_estimate, tangent_table, MalliavinRecord, MomentEstimate};
use crate::noise::generate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MalliavinRatePlan {
    pub levels: Vec<usize>,
    pub reference: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub samples: usize,
    pub x_star: f64,
    pub slope_window: Window,
}

impl Default for MalliavinRatePlan {
    fn default() -> Self {
        Self {
            levels: vec![4, 8, 16],
            reference: 32,
            m: 64,
            t_final: 0.1,
            samples: 200,
            x_star: PI / 2.0,
            slope_window: Window::at_most(-1.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NondegeneracyPlan {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub samples: usize,
    pub x_star: f64,
    pub rho: f64,
    /// Pass requires `std_error < max_relative_std_error · mean`.
    pub max_relative_std_error: f64,
}

impl Default for NondegeneracyPlan {
    fn default() -> Self {
        Self { n: 16, m: 32, t_final: 0.1, samples: 500, x_star: PI / 2.0, rho: 0.5, max_relative_std_error: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub samples: usize,
    pub discarded: usize,
    pub hnorm2: Vec<f64>,
    pub min_hnorm2: f64,
    pub mean_hnorm2: f64,
    pub rho: f64,
    pub negative_moment: Option<MomentEstimate>,
    pub pass: bool,
}

impl NondegeneracyReport {
    pub fn summary(&self) -> String {
        let moment =
            self.negative_moment.map_or("undefined".to_string(), |e| format!("{:.4} ± {:.4}", e.mean, e.std_error));
        format!(
            "nondegeneracy: min hnorm2 {:.4e}, E[hnorm2^-{}] {} -> {}",
            self.min_hnorm2,
            self.rho,
            moment,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Mean squared H-distance between each level's derivative kernel and the
/// reference level's, all driven by spatial aggregations of one master
/// sheet at `(m, n_ref)`.
pub fn malliavin_rate_study(plan: &MalliavinRatePlan, model: &Model, seed: u64) -> Result<RateReport> {
    check_ladder("malliavin", &plan.levels, plan.reference)?;
    check_samples("malliavin", plan.samples, 50)?;
    check_horizon("malliavin", plan.t_final)?;
    check_point("malliavin", plan.x_star)?;
    model.validate()?;
    let ref_cfg = model.config(plan.reference, plan.m, plan.t_final);
    let ref_basis = SpectralBasis::new(plan.reference)?;
    let bases = plan.levels.iter().map(|&n| SpectralBasis::new(n)).collect::<Result<Vec<_>>>()?;

    let (rows, discarded) = run_samples(plan.samples, |s| {
        let master = generate(seed, s, plan.m, plan.reference, plan.t_final)?;
        let fine = tangent_table(&ref_cfg, &ref_basis, &master.to_beta(), plan.x_star)?;
        plan.levels
            .iter()
            .zip(&bases)
            .map(|(&n, basis)| {
                let coarse = master.coarsen(1, plan.reference / n)?;
                check_coupling(&master, &coarse)?;
                let cfg = model.config(n, plan.m, plan.t_final);
                let rec = tangent_table(&cfg, basis, &coarse.to_beta(), plan.x_star)?;
                malliavin_distance(&rec, &fine, plan.t_final)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let (errors, std_errors) = (0..plan.levels.len())
        .map(|l| stats::mean_and_std_error(&rows.iter().map(|r| r[l]).collect::<Vec<_>>()))
        .unzip();
    RateReport::from_errors(
        "malliavin",
        plan.levels.clone(),
        plan.reference,
        errors,
        std_errors,
        plan.slope_window,
        None,
        plan.samples,
        discarded,
    )
}

/// H-norm records of independent samples and the `ρ` negative moment.
pub fn nondegeneracy_study(plan: &NondegeneracyPlan, model: &Model, seed: u64) -> Result<NondegeneracyReport> {
    check_samples("nondegeneracy", plan.samples, 2)?;
    check_horizon("nondegeneracy", plan.t_final)?;
    check_point("nondegeneracy", plan.x_star)?;
    if !(plan.rho > 0.0 && plan.rho <= 1.0) {
        return Err(crate::error::Error::invalid(format!("nondegeneracy: rho must lie in (0, 1], got {}", plan.rho)));
    }
    model.validate()?;
    let cfg = model.config(plan.n, plan.m, plan.t_final);
    let basis = SpectralBasis::new(plan.n)?;
    let (records, discarded): (Vec<MalliavinRecord>, usize) = run_samples(plan.samples, |s| {
        let sheet = generate(seed, s, plan.m, plan.n, plan.t_final)?;
        let mut rec = tangent_table(&cfg, &basis, &sheet.to_beta(), plan.x_star)?;
        rec.table = Vec::new();
        Ok(rec)
    })?;
    let hnorm2: Vec<f64> = records.iter().map(|r| r.hnorm2).collect();
    let min_hnorm2 = hnorm2.iter().copied().fold(f64::INFINITY, f64::min);
    let negative_moment = negative_moment_estimate(&records, plan.rho).ok();
    let pass = min_hnorm2 > 0.0
        && discarded == 0
        && negative_moment.is_some_and(|e| e.mean.is_finite() && e.std_error < plan.max_relative_std_error * e.mean);
    Ok(NondegeneracyReport {
        samples: plan.samples,
        discarded,
        mean_hnorm2: stats::mean(&hnorm2),
        hnorm2,
        min_hnorm2,
        rho: plan.rho,
        negative_moment,
        pass,
    })
}
