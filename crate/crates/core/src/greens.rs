//! Green kernels of `∂ₜ + Δ²` on `(0, π)` and of its spectral discretization,
//! plus quadrature for the kernel-error and regularity integrals.
//!
//! ```text
//! G_t(x, y)   = Σ_{j≥1} e^{-j⁴t} φ_j(x) φ_j(y),            φ_j = √(2/π)·sin(j·)
//! G^n_t(x, y) = Σ_{j<n} e^{-λ_{j,n}²t} φ_{j,n}(x) φ_j(κ_n(y))
//! ```
//!
//! `φ_{j,n}` is the polygonal interpolant of `φ_j` through the nodes and
//! `κ_n` snaps down to the grid, so `G^n_t(x, ·)` is constant on every cell.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralBasis;

/// Relative change allowed when both quadrature resolutions are doubled.
pub const SELF_CONVERGENCE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// Bound on the discarded series tail.
    pub tail_tol: f64,
    /// Hard cap on the number of series terms.
    pub j_max: usize,
    /// Uniform panels in the graded variable `u` (`s = T·u^grading`), each
    /// with a 4-point Gauss–Legendre rule.
    pub time_panels: usize,
    pub grading: f64,
    /// Midpoint subcells per mesh cell; `K_y = subcells · n`.
    pub subcells: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { tail_tol: 1e-14, j_max: 1 << 16, time_panels: 200, grading: 2.0, subcells: 16 }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0) {
            return Err(Error::invalid(format!("tail_tol must be positive, got {}", self.tail_tol)));
        }
        if self.j_max < 8 {
            return Err(Error::invalid(format!("j_max must be >= 8, got {}", self.j_max)));
        }
        if !(self.grading >= 1.0) {
            return Err(Error::invalid(format!("grading exponent must be >= 1, got {}", self.grading)));
        }
        if self.time_panels == 0 || self.subcells == 0 {
            return Err(Error::invalid("quadrature node counts must be positive"));
        }
        Ok(())
    }

    fn refined(&self) -> Self {
        Self { time_panels: 2 * self.time_panels, subcells: 2 * self.subcells, ..*self }
    }
}

/// Number of series terms so that `(2/π)·Σ_{j>J} j^w e^{-j⁴t} ≤ tail_tol`,
/// using the integral bound `(2/π)·J^w e^{-J⁴t} / (4J³t - w/J)`, valid once
/// the summand decreases (`4J⁴t > w`).
pub fn truncation_index(t: f64, weight_power: u32, cfg: &KernelConfig) -> usize {
    let w = weight_power as f64;
    let mut j = 1usize;
    while j < cfg.j_max {
        let jf = j as f64;
        let denom = 4.0 * jf.powi(3) * t - w / jf;
        if denom > 0.0 {
            let bound = (2.0 / PI) * jf.powf(w) * (-jf.powi(4) * t).exp() / denom;
            if bound <= cfg.tail_tol {
                return j;
            }
        }
        j += 1;
    }
    cfg.j_max
}

/// `Σ_{j=1}^{J} c[j-1]·sin(jy)` by Clenshaw recurrence.
fn sine_series(c: &[f64], y: f64) -> f64 {
    let two_cos = 2.0 * y.cos();
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().rev() {
        let b0 = ck + two_cos * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1 * y.sin()
}

fn check_point(x: f64) -> Result<()> {
    if !(0.0..=PI).contains(&x) {
        return Err(Error::invalid(format!("point {x} outside [0, π]")));
    }
    Ok(())
}

/// Coefficients `(2/π)·(-j²)^p·e^{-j⁴t}·sin(jx)` of the exact series in `sin(jy)`.
fn exact_coefficients(t: f64, x: f64, laplacian: bool, cfg: &KernelConfig) -> Vec<f64> {
    let w = if laplacian { 2 } else { 0 };
    let big_j = truncation_index(t, w, cfg);
    (1..=big_j)
        .map(|j| {
            let jf = j as f64;
            let weight = if laplacian { -jf * jf } else { 1.0 };
            (2.0 / PI) * weight * (-jf.powi(4) * t).exp() * (jf * x).sin()
        })
        .collect()
}

fn exact_series(t: f64, x: f64, y: f64, laplacian: bool, cfg: &KernelConfig) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("kernel time must be positive, got {t}")));
    }
    check_point(x)?;
    check_point(y)?;
    cfg.validate()?;
    // Evaluate in the symmetric form so G(x,y) and G(y,x) agree bitwise.
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    Ok(sine_series(&exact_coefficients(t, a, laplacian, cfg), b))
}

/// `G_t(x, y)`.
pub fn exact_kernel(t: f64, x: f64, y: f64, cfg: &KernelConfig) -> Result<f64> {
    exact_series(t, x, y, false, cfg)
}

/// `ΔG_t(x, y) = Σ (-j²) e^{-j⁴t} φ_j(x) φ_j(y)`.
pub fn exact_laplacian_kernel(t: f64, x: f64, y: f64, cfg: &KernelConfig) -> Result<f64> {
    exact_series(t, x, y, true, cfg)
}

/// Per-mode weights `w_j = e^{-λ_{j,n}²t}·(λ_{j,n})^p·φ_{j,n}(x)`.
fn discrete_weights(t: f64, x: f64, laplacian: bool, basis: &SpectralBasis) -> Vec<f64> {
    basis
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            let weight = if laplacian { lam } else { 1.0 };
            (-lam * lam * t).exp() * weight * basis.interpolated_mode(i + 1, x)
        })
        .collect()
}

/// Values of the discrete kernel on each cell `k = 0..n-1` (cell 0 is zero).
fn discrete_cell_values(weights: &[f64], basis: &SpectralBasis) -> Vec<f64> {
    let n = basis.n();
    (0..n).map(|k| weights.iter().enumerate().map(|(i, w)| w * basis.mode_at_node(i + 1, k)).sum()).collect()
}

fn discrete_series(t: f64, x: f64, y: f64, laplacian: bool, basis: &SpectralBasis) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("kernel time must be nonnegative, got {t}")));
    }
    check_point(x)?;
    check_point(y)?;
    let k = basis.mesh().cell_index(y);
    let w = discrete_weights(t, x, laplacian, basis);
    Ok(w.iter().enumerate().map(|(i, w)| w * basis.mode_at_node(i + 1, k)).sum())
}

/// `G^n_t(x, y)`.
pub fn discrete_kernel(t: f64, x: f64, y: f64, basis: &SpectralBasis) -> Result<f64> {
    discrete_series(t, x, y, false, basis)
}

/// `Δ_n G^n_t(x, y)`: the discrete kernel with modes weighted by `λ_{j,n}`.
pub fn discrete_laplacian_kernel(t: f64, x: f64, y: f64, basis: &SpectralBasis) -> Result<f64> {
    discrete_series(t, x, y, true, basis)
}

/// Quadrature value with the relative change observed when both
/// resolutions are doubled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureValue {
    pub value: f64,
    pub refined: f64,
    pub relative_change: f64,
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
    (-0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
];

#[derive(Clone, Copy)]
enum ErrorNorm {
    /// `∫∫ |G^n - G|²`
    KernelL2,
    /// `∫∫ |Δ_n G^n - ΔG|`
    LaplacianL1,
}

fn kernel_error_once(basis: &SpectralBasis, t_final: f64, x: f64, norm: ErrorNorm, cfg: &KernelConfig) -> f64 {
    let n = basis.n();
    let laplacian = matches!(norm, ErrorNorm::LaplacianL1);
    let ky = cfg.subcells * n;
    let dy = PI / ky as f64;
    let ys: Vec<f64> = (0..ky).map(|i| (i as f64 + 0.5) * dy).collect();
    let du = 1.0 / cfg.time_panels as f64;
    let mut total = 0.0;
    for p in 0..cfg.time_panels {
        let u0 = p as f64 * du;
        let mut panel = 0.0;
        for &(g, wg) in &GAUSS4 {
            let u = u0 + 0.5 * (g + 1.0) * du;
            let s = t_final * u.powf(cfg.grading);
            let ds = t_final * cfg.grading * u.powf(cfg.grading - 1.0) * 0.5 * wg * du;
            let coeffs = exact_coefficients(s, x, laplacian, cfg);
            let cells = discrete_cell_values(&discrete_weights(s, x, laplacian, basis), basis);
            let mut acc = 0.0;
            for (i, &y) in ys.iter().enumerate() {
                let d = cells[i / cfg.subcells] - sine_series(&coeffs, y);
                acc += match norm {
                    ErrorNorm::KernelL2 => d * d,
                    ErrorNorm::LaplacianL1 => d.abs(),
                };
            }
            panel += acc * dy * ds;
        }
        total += panel;
    }
    total
}

fn kernel_error(n: usize, t_final: f64, x: f64, norm: ErrorNorm, cfg: &KernelConfig) -> Result<QuadratureValue> {
    cfg.validate()?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::invalid(format!("horizon T must be positive, got {t_final}")));
    }
    check_point(x)?;
    let basis = SpectralBasis::new(n)?;
    let value = kernel_error_once(&basis, t_final, x, norm, cfg);
    let refined = kernel_error_once(&basis, t_final, x, norm, &cfg.refined());
    let relative_change = (value - refined).abs() / refined.abs().max(f64::MIN_POSITIVE);
    if relative_change > SELF_CONVERGENCE_LIMIT {
        return Err(Error::QuadratureUnresolved { relative_change });
    }
    Ok(QuadratureValue { value, refined, relative_change })
}

/// `∫₀^T ∫₀^π |G^n_s(x, y) - G_s(x, y)|² dy ds`.
pub fn kernel_error_l2(n: usize, t_final: f64, x: f64, cfg: &KernelConfig) -> Result<QuadratureValue> {
    kernel_error(n, t_final, x, ErrorNorm::KernelL2, cfg)
}

/// `∫₀^T ∫₀^π |Δ_n G^n_s(x, y) - ΔG_s(x, y)| dy ds`.
pub fn kernel_error_l1_laplacian(n: usize, t_final: f64, x: f64, cfg: &KernelConfig) -> Result<QuadratureValue> {
    kernel_error(n, t_final, x, ErrorNorm::LaplacianL1, cfg)
}

/// Space-time integrals controlling the regularity of stochastic
/// convolutions, each reduced to a per-mode closed form:
///
/// ```text
/// spatial  = ∫₀^t ∫ |G_{t-r}(x,z) - G_{t-r}(y,z)|² = Σ (1 - e^{-2μt})/(2μ) · |ψ_j(x) - ψ_j(y)|²
/// temporal = ∫₀^s ∫ |G_{t-r}(x,z) - G_{s-r}(x,z)|² = Σ (1 - e^{-μ(t-s)})² (1 - e^{-2μs})/(2μ) · ψ_j(x)²
/// tail     = ∫_s^t ∫ |G_{t-r}(x,z)|²               = Σ (1 - e^{-2μ(t-s)})/(2μ) · ψ_j(x)²
/// ```
///
/// with `μ = λ²` and `ψ_j` the mode profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityIntegrals {
    pub spatial: f64,
    pub temporal: f64,
    pub tail: f64,
}

/// `(1 - e^{-a})` without cancellation.
fn one_minus_exp(a: f64) -> f64 {
    -(-a).exp_m1()
}

fn regularity_sum(modes: impl Iterator<Item = (f64, f64, f64)>, s: f64, t: f64) -> RegularityIntegrals {
    let (mut spatial, mut temporal, mut tail) = (0.0, 0.0, 0.0);
    for (mu, px, py) in modes {
        let inv = 1.0 / (2.0 * mu);
        let d = px - py;
        spatial += one_minus_exp(2.0 * mu * t) * inv * d * d;
        let gap = one_minus_exp(mu * (t - s));
        temporal += gap * gap * one_minus_exp(2.0 * mu * s) * inv * px * px;
        tail += one_minus_exp(2.0 * mu * (t - s)) * inv * px * px;
    }
    RegularityIntegrals { spatial, temporal, tail }
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(0.0 <= s && s <= t && t.is_finite()) {
        return Err(Error::invalid(format!("need 0 <= s <= t, got s={s}, t={t}")));
    }
    Ok(())
}

/// Regularity integrals of the discrete kernel, by direct summation over `j < n`.
pub fn discrete_regularity_integrals(
    s: f64,
    t: f64,
    x: f64,
    y: f64,
    basis: &SpectralBasis,
) -> Result<RegularityIntegrals> {
    check_times(s, t)?;
    check_point(x)?;
    check_point(y)?;
    let modes = basis
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &lam)| (lam * lam, basis.interpolated_mode(i + 1, x), basis.interpolated_mode(i + 1, y)));
    Ok(regularity_sum(modes, s, t))
}

/// Regularity integrals of the exact kernel, summed to `cfg.j_max` terms
/// (the discarded tail is below `(4/π)/(3·j_max³)`).
pub fn continuous_regularity_integrals(
    s: f64,
    t: f64,
    x: f64,
    y: f64,
    cfg: &KernelConfig,
) -> Result<RegularityIntegrals> {
    check_times(s, t)?;
    check_point(x)?;
    check_point(y)?;
    cfg.validate()?;
    let c = (2.0 / PI).sqrt();
    let modes = (1..=cfg.j_max).map(|j| {
        let jf = j as f64;
        (jf.powi(4), c * (jf * x).sin(), c * (jf * y).sin())
    });
    Ok(regularity_sum(modes, s, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> KernelConfig {
        KernelConfig::default()
    }

    #[test]
    fn exact_kernel_symmetric() {
        for &(t, x, y) in &[(0.5, 0.3, 2.0), (1e-3, 1.1, 1.2), (0.05, 0.0, 1.0)] {
            let a = exact_kernel(t, x, y, &cfg()).unwrap();
            let b = exact_kernel(t, y, x, &cfg()).unwrap();
            assert!((a - b).abs() <= 1e-14);
            let a = exact_laplacian_kernel(t, x, y, &cfg()).unwrap();
            let b = exact_laplacian_kernel(t, y, x, &cfg()).unwrap();
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn rejects_bad_time() {
        assert!(exact_kernel(0.0, 1.0, 1.0, &cfg()).is_err());
        assert!(exact_kernel(-1.0, 1.0, 1.0, &cfg()).is_err());
        assert!(exact_kernel(1.0, 4.0, 1.0, &cfg()).is_err());
        let b = SpectralBasis::new(8).unwrap();
        assert!(discrete_kernel(-0.1, 1.0, 1.0, &b).is_err());
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut s = f(a) + f(b);
        for i in 1..panels {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn eigenfunction_identities() {
        let phi1 = |y: f64| (2.0 / PI).sqrt() * y.sin();
        let t = 0.5;
        for x in [0.4, PI / 2.0, 2.5] {
            let g = simpson(|y| exact_kernel(t, x, y, &cfg()).unwrap() * phi1(y), 0.0, PI, 2000);
            assert!((g - (-t).exp() * phi1(x)).abs() < 1e-8);
            let dg = simpson(|y| exact_laplacian_kernel(t, x, y, &cfg()).unwrap() * phi1(y), 0.0, PI, 2000);
            assert!((dg + (-t).exp() * phi1(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn leading_term_dominates_for_large_time() {
        let (x, y) = (0.7, 2.1);
        let g = exact_kernel(10.0, x, y, &cfg()).unwrap();
        let lead = (-10.0_f64).exp() * (2.0 / PI) * x.sin() * y.sin();
        assert!(((g - lead) / lead).abs() <= (-30.0_f64).exp());
    }

    #[test]
    fn truncation_is_stable() {
        let wide = KernelConfig { j_max: 1 << 20, ..cfg() };
        for t in [1e-4, 1e-2, 0.3] {
            let a = exact_laplacian_kernel(t, 1.0, 1.3, &cfg()).unwrap();
            let b = {
                let n = truncation_index(t, 2, &cfg()) + 50;
                let c = exact_coefficients(t, 1.0, true, &KernelConfig { tail_tol: 0.0, j_max: n, ..wide });
                sine_series(&c, 1.3)
            };
            assert!((a - b).abs() <= 10.0 * cfg().tail_tol, "{t}: {a} vs {b}");
        }
    }

    #[test]
    fn laplacian_envelope_exponent() {
        let ts: Vec<f64> = (0..13).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
        let (lx, ly): (Vec<f64>, Vec<f64>) = ts
            .iter()
            .map(|&t| (t.ln(), exact_laplacian_kernel(t, PI / 2.0, PI / 2.0, &cfg()).unwrap().abs().ln()))
            .unzip();
        let mx = lx.iter().sum::<f64>() / lx.len() as f64;
        let my = ly.iter().sum::<f64>() / ly.len() as f64;
        let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
        assert!(sxy / sxx >= -0.8);
    }

    #[test]
    fn discrete_kernel_at_time_zero() {
        let b = SpectralBasis::new(16).unwrap();
        let k = 5;
        let x = b.mesh().node(k);
        let direct: f64 = (1..16).map(|j| b.mode_at_node(j, k).powi(2)).sum();
        let via_e: f64 = (16.0 / PI) * (1..16).map(|j| b.eigenvector_entry(j, k).powi(2)).sum::<f64>();
        let g = discrete_kernel(0.0, x, x, &b).unwrap();
        assert!((g - direct).abs() < 1e-12);
        assert!((g - via_e).abs() < 1e-12);
    }

    #[test]
    fn discrete_kernel_boundary_zero() {
        let b = SpectralBasis::new(8).unwrap();
        for y in [0.3, 1.7] {
            assert_eq!(discrete_kernel(0.1, 0.0, y, &b).unwrap().abs(), 0.0);
            assert!(discrete_kernel(0.1, PI, y, &b).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn discrete_kernel_converges_pointwise() {
        // y on the grid for every n, so only the x-interpolation and eigenvalue errors remain.
        let (t, x, y) = (0.1, PI / 2.0, 3.0 * PI / 8.0);
        let g = exact_kernel(t, x, y, &cfg()).unwrap();
        let errs: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&n| (discrete_kernel(t, x, y, &SpectralBasis::new(n).unwrap()).unwrap() - g).abs())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
        for (i, n) in [8.0, 16.0, 32.0, 64.0].iter().enumerate() {
            assert!(errs[i] <= 10.0 * errs[3] * (64.0 / n));
        }
    }

    #[test]
    fn kernel_error_decays() {
        let c = KernelConfig { time_panels: 60, subcells: 8, ..cfg() };
        let a = kernel_error_l2(8, 0.5, PI / 2.0, &c).unwrap();
        let b = kernel_error_l2(16, 0.5, PI / 2.0, &c).unwrap();
        assert!(a.value > 0.0 && b.value > 0.0);
        let r = a.value / b.value;
        assert!((3.0..=5.5).contains(&r), "{r}");
        assert!(a.relative_change <= SELF_CONVERGENCE_LIMIT);
    }

    #[test]
    fn unresolved_quadrature_is_flagged() {
        let c = KernelConfig { time_panels: 1, subcells: 1, ..cfg() };
        match kernel_error_l1_laplacian(8, 0.5, PI / 2.0, &c) {
            Err(Error::QuadratureUnresolved { relative_change }) => assert!(relative_change > 0.05),
            other => panic!("expected unresolved quadrature, got {other:?}"),
        }
    }

    #[test]
    fn regularity_spatial_bound() {
        let b = SpectralBasis::new(64).unwrap();
        let per_mode: f64 = b
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let j = (i + 1) as f64;
                (2.0 / PI) * j * j / (2.0 * l * l)
            })
            .sum();
        for d in [0.01, 0.05, 0.2] {
            let r = discrete_regularity_integrals(0.0, 0.3, 1.0, 1.0 + d, &b).unwrap();
            assert!(r.spatial / (d * d) <= 2.0 * per_mode);
        }
    }

    #[test]
    fn regularity_tail_scaling() {
        let b = SpectralBasis::new(1024).unwrap();
        let t = 0.5;
        let (lx, ly): (Vec<f64>, Vec<f64>) = (8..=16)
            .map(|p| {
                let gap = 2f64.powi(-p);
                let r = discrete_regularity_integrals(t - gap, t, PI / 2.0, PI / 2.0, &b).unwrap();
                (gap.log2(), r.tail.log2())
            })
            .unzip();
        let mx = lx.iter().sum::<f64>() / lx.len() as f64;
        let my = ly.iter().sum::<f64>() / ly.len() as f64;
        let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
        let slope = sxy / sxx;
        assert!((0.65..=0.85).contains(&slope), "{slope}");
    }

    #[test]
    fn regularity_degenerate_interval() {
        let b = SpectralBasis::new(16).unwrap();
        let r = discrete_regularity_integrals(0.2, 0.2, 1.0, 1.3, &b).unwrap();
        assert_eq!(r.temporal, 0.0);
        assert_eq!(r.tail, 0.0);
        let c = continuous_regularity_integrals(0.2, 0.2, 1.0, 1.3, &KernelConfig { j_max: 1000, ..cfg() }).unwrap();
        assert_eq!((c.temporal, c.tail), (0.0, 0.0));
        assert!(discrete_regularity_integrals(0.3, 0.2, 1.0, 1.0, &b).is_err());
    }

    #[test]
    fn continuous_regularity_matches_discrete_limit() {
        let c = continuous_regularity_integrals(0.1, 0.2, 1.0, 1.2, &KernelConfig { j_max: 20_000, ..cfg() }).unwrap();
        let d = discrete_regularity_integrals(0.1, 0.2, 1.0, 1.2, &SpectralBasis::new(2048).unwrap()).unwrap();
        assert!((c.spatial - d.spatial).abs() / c.spatial < 0.05);
        assert!((c.tail - d.tail).abs() / c.tail < 0.05);
    }
}
