//! Decay of the kernel errors under mesh doubling.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stats, Window};
use crate::error::{Error, Result};
use crate::greens::{kernel_error_l1_laplacian, kernel_error_l2, KernelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelErrorPlan {
    pub levels: Vec<usize>,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub points: Vec<f64>,
    pub l2_ratio_window: Window,
    pub l1_ratio_window: Window,
    pub quadrature: KernelConfig,
}

impl Default for KernelErrorPlan {
    fn default() -> Self {
        Self {
            levels: vec![8, 16, 32],
            t_final: 0.5,
            points: vec![PI / 4.0, PI / 2.0, 3.0 * PI / 4.0],
            l2_ratio_window: Window::between(3.0, 5.5),
            l1_ratio_window: Window::between(1.7, 2.6),
            quadrature: KernelConfig::default(),
        }
    }
}

/// One `(x, n)` evaluation; `*_change` is the relative change under
/// doubled quadrature, `None` when the value could not be resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelErrorRow {
    pub x: f64,
    pub n: usize,
    pub l2_error: Option<f64>,
    pub l2_change: f64,
    pub l1_laplacian_error: Option<f64>,
    pub l1_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPointSummary {
    pub x: f64,
    pub l2_ratios: Vec<f64>,
    pub l1_ratios: Vec<f64>,
    pub l2_slope: Option<f64>,
    pub l1_slope: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelErrorReport {
    pub rows: Vec<KernelErrorRow>,
    pub points: Vec<KernelPointSummary>,
    pub pass: bool,
}

impl KernelErrorReport {
    pub fn summary(&self) -> String {
        let worst = |f: &dyn Fn(&KernelPointSummary) -> &Vec<f64>| {
            let all: Vec<f64> = self.points.iter().flat_map(|p| f(p).iter().copied()).collect();
            let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            format!("[{lo:.3}, {hi:.3}]")
        };
        format!(
            "kernel-errors: L2 ratios {}, L1 Laplacian ratios {} -> {}",
            worst(&|p| &p.l2_ratios),
            worst(&|p| &p.l1_ratios),
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

fn resolve(r: Result<crate::greens::QuadratureValue>) -> Result<(Option<f64>, f64)> {
    match r {
        Ok(q) => Ok((Some(q.value), q.relative_change)),
        Err(Error::QuadratureUnresolved { relative_change }) => Ok((None, relative_change)),
        Err(e) => Err(e),
    }
}

fn ratios(v: &[Option<f64>]) -> Option<Vec<f64>> {
    let v: Option<Vec<f64>> = v.iter().copied().collect();
    v.map(|v| v.windows(2).map(|w| w[0] / w[1]).collect())
}

pub fn kernel_error_study(plan: &KernelErrorPlan) -> Result<KernelErrorReport> {
    plan.quadrature.validate()?;
    if plan.levels.len() < 2 || plan.levels.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::invalid("kernel_errors: levels must be a doubling ladder of at least two entries"));
    }
    if plan.points.is_empty() {
        return Err(Error::invalid("kernel_errors: at least one evaluation point is required"));
    }
    super::check_horizon("kernel_errors", plan.t_final)?;
    for &x in &plan.points {
        super::check_point("kernel_errors", x)?;
    }
    let tasks: Vec<(f64, usize)> = plan.points.iter().flat_map(|&x| plan.levels.iter().map(move |&n| (x, n))).collect();
    let rows = tasks
        .par_iter()
        .map(|&(x, n)| {
            let (l2_error, l2_change) = resolve(kernel_error_l2(n, plan.t_final, x, &plan.quadrature))?;
            let (l1_laplacian_error, l1_change) =
                resolve(kernel_error_l1_laplacian(n, plan.t_final, x, &plan.quadrature))?;
            Ok(KernelErrorRow { x, n, l2_error, l2_change, l1_laplacian_error, l1_change })
        })
        .collect::<Result<Vec<_>>>()?;

    let levels: Vec<f64> = plan.levels.iter().map(|&n| n as f64).collect();
    let points: Vec<KernelPointSummary> = plan
        .points
        .iter()
        .enumerate()
        .map(|(p, &x)| {
            let chunk = &rows[p * plan.levels.len()..(p + 1) * plan.levels.len()];
            let l2: Vec<Option<f64>> = chunk.iter().map(|r| r.l2_error).collect();
            let l1: Vec<Option<f64>> = chunk.iter().map(|r| r.l1_laplacian_error).collect();
            let slope = |v: &[Option<f64>]| {
                let v: Option<Vec<f64>> = v.iter().copied().collect();
                v.and_then(|v| stats::fit_rate(&levels, &v).ok()).map(|f| f.slope)
            };
            let (l2r, l1r) = (ratios(&l2), ratios(&l1));
            let pass = l2r.as_ref().is_some_and(|r| r.iter().all(|&v| plan.l2_ratio_window.contains(v)))
                && l1r.as_ref().is_some_and(|r| r.iter().all(|&v| plan.l1_ratio_window.contains(v)));
            KernelPointSummary {
                x,
                l2_slope: slope(&l2),
                l1_slope: slope(&l1),
                l2_ratios: l2r.unwrap_or_default(),
                l1_ratios: l1r.unwrap_or_default(),
                pass,
            }
        })
        .collect();
    let pass = points.iter().all(|p| p.pass);
    Ok(KernelErrorReport { rows, points, pass })
}
