//! Order-independent reductions, rate fitting and kernel density estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise (cascade) summation; the grouping depends only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Sample mean and its standard error `sd/√M` (unbiased variance).
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let len = values.len();
    let mu = mean(values);
    if len < 2 {
        return (mu, f64::NAN);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mu) * (v - mu)).collect();
    let var = pairwise_sum(&dev) / (len - 1) as f64;
    (mu, (var / len as f64).sqrt())
}

/// `(E|d|^p)^{1/p}` with a delta-method standard error.
pub fn lp_norm_with_error(diffs: &[f64], p: f64) -> (f64, f64) {
    let pow: Vec<f64> = diffs.iter().map(|d| d.abs().powf(p)).collect();
    let (mu, se) = mean_and_std_error(&pow);
    let norm = mu.powf(1.0 / p);
    let norm_se = if mu > 0.0 { norm * se / (p * mu) } else { 0.0 };
    (norm, norm_se)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `log₂ error` on `log₂ level`.
pub fn fit_rate(levels: &[f64], errors: &[f64]) -> Result<RateFit> {
    if levels.len() != errors.len() {
        return Err(Error::DimensionMismatch { expected: levels.len(), actual: errors.len() });
    }
    if levels.len() < 3 {
        return Err(Error::invalid(format!("rate fit needs at least 3 levels, got {}", levels.len())));
    }
    if levels.iter().chain(errors).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("rate fit needs positive finite levels and errors"));
    }
    let x: Vec<f64> = levels.iter().map(|l| l.log2()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let (mx, my) = (mean(&x), mean(&y));
    let sxy = pairwise_sum(&x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).collect::<Vec<_>>());
    let sxx = pairwise_sum(&x.iter().map(|a| (a - mx) * (a - mx)).collect::<Vec<_>>());
    let syy = pairwise_sum(&y.iter().map(|b| (b - my) * (b - my)).collect::<Vec<_>>());
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit needs distinct levels"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { slope, intercept: my - slope * mx, r2 })
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule `0.9·min(sd, IQR/1.34)·M^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("bandwidth needs at least two samples"));
    }
    let (_, se) = mean_and_std_error(samples);
    let sd = se * (samples.len() as f64).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bw = 0.9 * spread * (samples.len() as f64).powf(-0.2);
    if !(bw > 1e-300 && bw.is_finite()) {
        return Err(Error::invalid("degenerate bandwidth: sample variance is zero"));
    }
    Ok(bw)
}

/// Gaussian KDE evaluated on `grid`.
pub fn kde(samples: &[f64], bandwidth: f64, grid: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    grid.iter()
        .map(|&g| {
            let terms: Vec<f64> = samples
                .iter()
                .map(|&x| {
                    let z = (g - x) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .collect();
            norm * pairwise_sum(&terms)
        })
        .collect()
}

/// `points` equispaced nodes over the joint range of all sets, padded by
/// 10% of that range on each side.
pub fn common_grid(sets: &[&[f64]], points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::invalid("evaluation grid needs at least two points"));
    }
    let all = sets.iter().flat_map(|s| s.iter().copied());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("evaluation grid needs finite samples"));
    }
    let pad = if hi > lo { 0.1 * (hi - lo) } else { 1.0 };
    let (a, b) = (lo - pad, hi + pad);
    Ok((0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect())
}

/// Trapezoid rule for `∫|p - q|` on `grid`.
pub fn l1_trapezoid(p: &[f64], q: &[f64], grid: &[f64]) -> f64 {
    let d: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a - b).abs()).collect();
    let pieces: Vec<f64> = (1..grid.len()).map(|i| 0.5 * (d[i] + d[i - 1]) * (grid[i] - grid[i - 1])).collect();
    pairwise_sum(&pieces)
}
