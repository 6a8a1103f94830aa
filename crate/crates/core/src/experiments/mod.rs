//! Monte Carlo studies: strong rates in space and time, kernel-error decay,
//! Hölder exponents, density convergence and Malliavin derivative
//! convergence.
//!
//! Samples are the unit of parallelism. Each sample is a pure function of
//! `(seed, sample_index)`, results are collected in sample order and reduced
//! sequentially, so every report is independent of the worker count.

pub mod density;
pub mod derivative;
pub mod holder;
pub mod kernel;
pub mod rates;
pub mod stats;
pub mod validate;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Diffusion, Drift, InitialData};
use crate::noise::SheetIncrements;
use crate::solver::{RecordPolicy, SolverConfig};

pub use density::{density_study, DensityPlan, DensityReport};
pub use derivative::{
    malliavin_rate_study, nondegeneracy_study, MalliavinRatePlan, NondegeneracyPlan, NondegeneracyReport,
};
pub use holder::{holder_study, HolderPlan, HolderReport};
pub use kernel::{kernel_error_study, KernelErrorPlan, KernelErrorReport};
pub use rates::{spatial_rate_study, temporal_rate_study, SpatialRatePlan, TemporalRatePlan};

/// Errors at or below this are treated as exact zeros.
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// A level is under-sampled when its standard error exceeds this fraction
/// of its error estimate.
pub const MAX_RELATIVE_STD_ERROR: f64 = 0.25;

/// Coefficients shared by every level of a study.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Model {
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub initial: InitialData,
}

impl Model {
    pub fn config(&self, n: usize, m: usize, t_final: f64) -> SolverConfig {
        SolverConfig {
            n,
            m,
            t_final,
            drift: self.drift,
            diffusion: self.diffusion,
            initial: self.initial.clone(),
            record: RecordPolicy::TerminalOnly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.drift.validate()?;
        self.diffusion.validate()?;
        self.initial.validate()
    }
}

/// Closed interval with optional ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Window {
    pub fn between(min: f64, max: f64) -> Self {
        Self { min: Some(min), max: Some(max) }
    }

    pub fn at_most(max: f64) -> Self {
        Self { min: None, max: Some(max) }
    }

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && self.min.is_none_or(|a| v >= a) && self.max.is_none_or(|b| v <= b)
    }
}

/// Per-level errors with a fitted log₂–log₂ slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub study: String,
    pub levels: Vec<usize>,
    pub reference: usize,
    pub errors: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `None` when every error is an exact zero.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub window: Window,
    pub min_r2: Option<f64>,
    pub exact: bool,
    pub samples: usize,
    pub discarded: usize,
    pub insufficient_samples: bool,
    pub pass: bool,
}

impl RateReport {
    #[allow(clippy::too_many_arguments)]
    pub fn from_errors(
        study: &str,
        levels: Vec<usize>,
        reference: usize,
        errors: Vec<f64>,
        std_errors: Vec<f64>,
        window: Window,
        min_r2: Option<f64>,
        samples: usize,
        discarded: usize,
    ) -> Result<Self> {
        let exact = errors.iter().all(|e| e.abs() <= EXACT_TOLERANCE);
        let insufficient_samples =
            !exact && errors.iter().zip(&std_errors).any(|(e, s)| *s > MAX_RELATIVE_STD_ERROR * e);
        let (slope, intercept, r2, pass) = if exact {
            (None, None, None, true)
        } else {
            let x: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
            let fit = stats::fit_rate(&x, &errors)?;
            let pass = window.contains(fit.slope)
                && min_r2.is_none_or(|r| fit.r2 >= r)
                && !insufficient_samples
                && discarded == 0;
            (Some(fit.slope), Some(fit.intercept), Some(fit.r2), pass)
        };
        Ok(Self {
            study: study.to_string(),
            levels,
            reference,
            errors,
            std_errors,
            slope,
            intercept,
            r2,
            window,
            min_r2,
            exact,
            samples,
            discarded,
            insufficient_samples,
            pass,
        })
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        match (self.slope, self.r2) {
            (Some(s), Some(r2)) => {
                format!("{}: slope {s:.4} (R² {r2:.4}) window {} -> {verdict}", self.study, fmt_window(&self.window))
            }
            _ => format!("{}: all errors exact -> {verdict}", self.study),
        }
    }
}

pub(crate) fn fmt_window(w: &Window) -> String {
    let lo = w.min.map_or("-inf".to_string(), |v| format!("{v}"));
    let hi = w.max.map_or("+inf".to_string(), |v| format!("{v}"));
    format!("[{lo}, {hi}]")
}

/// Checks a nested ladder: at least three strictly increasing levels, each
/// dividing `reference` and smaller than it.
pub(crate) fn check_ladder(name: &str, levels: &[usize], reference: usize) -> Result<()> {
    if levels.len() < 3 {
        return Err(Error::invalid(format!("{name}: ladder needs at least 3 levels")));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!("{name}: ladder must be strictly increasing")));
    }
    if let Some(l) = levels.iter().find(|&&l| l == 0 || l >= reference || !reference.is_multiple_of(l)) {
        return Err(Error::invalid(format!("{name}: level {l} must divide and be below the reference {reference}")));
    }
    Ok(())
}

pub(crate) fn check_samples(name: &str, samples: usize, min: usize) -> Result<()> {
    if samples < min {
        return Err(Error::invalid(format!("{name}: needs at least {min} samples, got {samples}")));
    }
    Ok(())
}

pub(crate) fn check_horizon(name: &str, t_final: f64) -> Result<()> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::invalid(format!("{name}: T must be positive, got {t_final}")));
    }
    Ok(())
}

pub(crate) fn check_point(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < PI) {
        return Err(Error::invalid(format!("{name}: evaluation point {x} must lie in (0, π)")));
    }
    Ok(())
}

/// Verifies that `coarse` aggregates `master` exactly: the totals agree to
/// rounding.
pub fn check_coupling(master: &SheetIncrements, coarse: &SheetIncrements) -> Result<()> {
    let scale: f64 = master.increments().iter().map(|v| v.abs()).sum();
    let diff = (coarse.total() - master.total()).abs();
    if diff > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Coupling(diff));
    }
    Ok(())
}

/// Runs `f` for samples `0..count` in parallel and returns the kept results
/// in sample order with the number discarded for overflow.
pub(crate) fn run_samples<T, F>(count: usize, f: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..count as u64).into_par_iter().map(&f).collect();
    let mut kept = Vec::with_capacity(count);
    let mut discarded = 0;
    for r in results {
        match r {
            Ok(v) => kept.push(v),
            Err(Error::Overflow { .. }) => discarded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((kept, discarded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::generate;

    #[test]
    fn window_membership() {
        let w = Window::between(-1.35, -0.75);
        assert!(w.contains(-1.0) && !w.contains(-0.5) && !w.contains(f64::NAN));
        assert!(Window::at_most(-1.2).contains(-5.0));
    }

    #[test]
    fn synthetic_rates() {
        let levels = vec![4, 8, 16, 32];
        let errors: Vec<f64> = levels.iter().map(|&l| 0.5 * 2f64.powf(-(l as f64).log2())).collect();
        let r =
            RateReport::from_errors("t", levels, 64, errors, vec![0.0; 4], Window::between(-1.1, -0.9), None, 10, 0)
                .unwrap();
        assert!((r.slope.unwrap() + 1.0).abs() < 1e-12);
        assert!(r.pass);
        let z = RateReport::from_errors(
            "z",
            vec![1, 2, 4],
            8,
            vec![0.0; 3],
            vec![0.0; 3],
            Window::between(-1.0, 0.0),
            None,
            10,
            0,
        )
        .unwrap();
        assert!(z.exact && z.slope.is_none() && z.pass);
    }

    #[test]
    fn noisy_synthetic_slope() {
        let levels = [2, 4, 8, 16, 32];
        let noise = [1.07, 0.93, 1.1, 0.95, 1.02];
        let errors: Vec<f64> = levels.iter().zip(noise).map(|(&l, z)| z / l as f64).collect();
        let fit = stats::fit_rate(&levels.iter().map(|&l| l as f64).collect::<Vec<_>>(), &errors).unwrap();
        assert!((-1.25..=-0.75).contains(&fit.slope));
    }

    #[test]
    fn ladder_checks() {
        assert!(check_ladder("x", &[4, 8, 16], 64).is_ok());
        assert!(check_ladder("x", &[4, 8], 64).is_err());
        assert!(check_ladder("x", &[8, 4, 16], 64).is_err());
        assert!(check_ladder("x", &[4, 8, 64], 64).is_err());
        assert!(check_ladder("x", &[4, 8, 24], 64).is_err());
    }

    #[test]
    fn coupling_checksum() {
        let s = generate(0, 0, 16, 16, 0.1).unwrap();
        check_coupling(&s, &s.coarsen(4, 2).unwrap()).unwrap();
        let other = generate(0, 1, 16, 16, 0.1).unwrap().coarsen(4, 2).unwrap();
        assert!(matches!(check_coupling(&s, &other), Err(Error::Coupling(_))));
    }
}
