//! Malliavin derivatives of the exponential Euler scheme.
//!
//! The derivative of `U_j` with respect to one increment `Δβ_i^k` is the
//! tangent `D`, zero for `j ≤ i`, created by
//!
//! ```text
//! D_{i+1} = E_τ[ √(n/π)·σ(U_i(k))·1_k ]
//! ```
//!
//! and transported by the linearized step
//!
//! ```text
//! D_{j+1} = E_τ[ D_j + τ·A_n(f'(U_j) ∘ D_j) + √(n/π)·(σ'(U_j) ∘ D_j) ∘ Δβ_j ].
//! ```
//!
//! Each `Δβ_i^k = W(h_{i,k})` for pairwise orthogonal `h_{i,k}` with
//! `‖h_{i,k}‖² = (n/π)·τ·h = τ`, so the discrete H-norm is
//! `‖Du‖² = τ·Σ_{i,k} (∂u/∂Δβ_i^k)²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DstWorkspace, Field, SpectralBasis};
use crate::models::{Diffusion, Drift};
use crate::noise::{BetaIncrements, SheetIncrements};
use crate::solver::{evolve, SolverConfig, OVERFLOW_THRESHOLD};

/// Largest `m·n` accepted by [`hnorm2_at`].
pub const TANGENT_CAP: usize = 8192;

/// `∂U_step / ∂Δβ_creation`, with `creation = (i, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    pub creation: (usize, usize),
    /// Time index of the state this tangent differentiates.
    pub step: usize,
    pub values: Field,
}

/// Mode-space linear operators shared by all tangents of one run.
#[derive(Debug, Clone)]
struct TangentKernel<'a> {
    basis: &'a SpectralBasis,
    noise_scale: f64,
    decay: Vec<f64>,
    tau_lambda: Vec<f64>,
    ws: DstWorkspace,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl<'a> TangentKernel<'a> {
    fn new(basis: &'a SpectralBasis, tau: f64) -> Self {
        let lam = basis.eigenvalues();
        let len = basis.n() - 1;
        Self {
            basis,
            noise_scale: (basis.n() as f64 / PI).sqrt(),
            decay: lam.iter().map(|l| (-l * l * tau).exp()).collect(),
            tau_lambda: lam.iter().map(|l| tau * l).collect(),
            ws: basis.plan().workspace(),
            a: vec![0.0; len],
            b: vec![0.0; len],
        }
    }

    /// `out = E_τ[ s·σ(u_k)·1_k ]`, interior index `k ∈ 1..n-1`.
    fn inject(&mut self, u: &[f64], k: usize, diffusion: &Diffusion, out: &mut [f64]) {
        self.a.iter_mut().for_each(|v| *v = 0.0);
        self.a[k - 1] = self.noise_scale * diffusion.eval(u[k - 1]);
        let plan = self.basis.plan();
        plan.transform(&self.a, &mut self.b, &mut self.ws);
        for (b, d) in self.b.iter_mut().zip(&self.decay) {
            *b *= d;
        }
        plan.transform(&self.b, out, &mut self.ws);
    }

    /// In-place linearized step of `d` about state `u` with increments `dbeta`.
    fn transport(&mut self, d: &mut [f64], u: &[f64], dbeta: &[f64], drift: &Drift, diffusion: &Diffusion) {
        let plan = self.basis.plan();
        let s = self.noise_scale;
        let constant_sigma = diffusion.is_constant();
        if constant_sigma {
            self.a.copy_from_slice(d);
        } else {
            for (((a, &dv), &x), &db) in self.a.iter_mut().zip(d.iter()).zip(u).zip(dbeta) {
                *a = dv + s * diffusion.derivative(x) * dv * db;
            }
        }
        // self.b <- DST(a)
        plan.transform(&self.a, &mut self.b, &mut self.ws);
        if !drift.is_zero() {
            for ((a, &dv), &x) in self.a.iter_mut().zip(d.iter()).zip(u) {
                *a = drift.derivative(x) * dv;
            }
            plan.transform(&self.a, d, &mut self.ws);
            for ((b, &fd), &tl) in self.b.iter_mut().zip(d.iter()).zip(&self.tau_lambda) {
                *b += tl * fd;
            }
        }
        for (b, dec) in self.b.iter_mut().zip(&self.decay) {
            *b *= dec;
        }
        plan.transform(&self.b, d, &mut self.ws);
    }
}

/// Creates the tangent of `Δβ_i^k` at step `i + 1` from the state `U_i`.
pub fn tangent_inject(
    u_i: &Field,
    i: usize,
    k: usize,
    basis: &SpectralBasis,
    tau: f64,
    diffusion: &Diffusion,
) -> Result<TangentField> {
    let n = basis.n();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("tangent cell {k} outside 1..{}", n - 1)));
    }
    if u_i.mesh().n() != n {
        return Err(Error::DimensionMismatch { expected: n - 1, actual: u_i.values().len() });
    }
    let mut out = vec![0.0; n - 1];
    TangentKernel::new(basis, tau).inject(u_i.values(), k, diffusion, &mut out);
    Ok(TangentField { creation: (i, k), step: i + 1, values: Field::from_values(basis.mesh(), out)? })
}

/// Advances `d` (a tangent at step `j`) across step `j` about the state `U_j`.
pub fn tangent_step(
    d: &TangentField,
    u_j: &Field,
    dbeta_j: &[f64],
    basis: &SpectralBasis,
    tau: f64,
    drift: &Drift,
    diffusion: &Diffusion,
) -> Result<TangentField> {
    let n = basis.n();
    if d.step <= d.creation.0 {
        return Err(Error::invalid("tangent is not active before its creation step"));
    }
    if dbeta_j.len() != n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, actual: dbeta_j.len() });
    }
    if u_j.mesh().n() != n || d.values.mesh().n() != n {
        return Err(Error::DimensionMismatch { expected: n - 1, actual: u_j.values().len() });
    }
    let mut values = d.values.values().to_vec();
    TangentKernel::new(basis, tau).transport(&mut values, u_j.values(), dbeta_j, drift, diffusion);
    check_tangent(&values, d.step + 1)?;
    Ok(TangentField { creation: d.creation, step: d.step + 1, values: Field::from_values(basis.mesh(), values)? })
}

fn check_tangent(d: &[f64], step: usize) -> Result<()> {
    let norm = d.iter().fold(0.0_f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) });
    if norm.is_nan() || norm > OVERFLOW_THRESHOLD {
        return Err(Error::Overflow { step, norm });
    }
    Ok(())
}

/// Per-sample H-norm record at `(T, x*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalliavinRecord {
    /// `τ·Σ (∂u(T, x*)/∂Δβ_i^k)²`
    pub hnorm2: f64,
    pub x_star: f64,
    /// `u(T, x*)`
    pub value: f64,
    pub m: usize,
    pub n: usize,
    /// `∂u(T, x*)/∂Δβ_i^k` at `i*n + k`; column `k = 0` is identically zero.
    pub table: Vec<f64>,
}

impl MalliavinRecord {
    /// `∂u(T, x*)/∂ΔW_i^k = √(n/π)·∂u(T, x*)/∂Δβ_i^k`.
    pub fn sheet_derivative(&self, i: usize, k: usize) -> f64 {
        (self.n as f64 / PI).sqrt() * self.table[i * self.n + k]
    }
}

/// Derivative table of `u(T, x*)` for the scheme driven by `beta`.
pub fn tangent_table(
    config: &SolverConfig,
    basis: &SpectralBasis,
    beta: &BetaIncrements,
    x_star: f64,
) -> Result<MalliavinRecord> {
    config.validate()?;
    let (m, n) = (config.m, config.n);
    if m * n > TANGENT_CAP {
        return Err(Error::invalid(format!("tangent table {m} x {n} exceeds the cap m*n <= {TANGENT_CAP}")));
    }
    if !(0.0..=PI).contains(&x_star) {
        return Err(Error::invalid(format!("evaluation point {x_star} outside [0, π]")));
    }
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let terminal = evolve(config, basis, beta, |_, u| states.push(u.to_vec()))?;
    let value = basis.mesh().interpolate(&terminal, x_star);
    let tau = config.tau();
    let mut kernel = TangentKernel::new(basis, tau);
    let mut table = vec![0.0; m * n];
    let mut d = vec![0.0; n - 1];
    for i in 0..m {
        for k in 1..n {
            kernel.inject(&states[i], k, &config.diffusion, &mut d);
            for (j, u_j) in states.iter().enumerate().take(m).skip(i + 1) {
                kernel.transport(&mut d, u_j, beta.step(j), &config.drift, &config.diffusion);
            }
            check_tangent(&d, m)?;
            table[i * n + k] = basis.mesh().interpolate(&d, x_star);
        }
    }
    let hnorm2 = tau * table.iter().map(|v| v * v).sum::<f64>();
    Ok(MalliavinRecord { hnorm2, x_star, value, m, n, table })
}

/// One-sided difference `(u_ε(T, x*) - u(T, x*))/ε` after bumping `Δβ_i^k`
/// by `ε` and rerunning the scheme.
#[allow(clippy::too_many_arguments)]
pub fn bump_derivative(
    config: &SolverConfig,
    basis: &SpectralBasis,
    beta: &BetaIncrements,
    i: usize,
    k: usize,
    eps: f64,
    x_star: f64,
) -> Result<f64> {
    if i >= config.m || k == 0 || k >= config.n {
        return Err(Error::invalid(format!("bump cell ({i}, {k}) outside the noise grid")));
    }
    let base = evolve(config, basis, beta, |_, _| {})?;
    let mut bumped = beta.clone();
    bumped.set(i, k, beta.get(i, k) + eps);
    let moved = evolve(config, basis, &bumped, |_, _| {})?;
    let mesh = basis.mesh();
    Ok((mesh.interpolate(&moved, x_star) - mesh.interpolate(&base, x_star)) / eps)
}

/// Propagates all `m·(n-1)` tangents alongside one forward solve on the
/// `(m, n)` aggregation of `sheet`.
pub fn hnorm2_at(config: &SolverConfig, sheet: &SheetIncrements, x_star: f64) -> Result<MalliavinRecord> {
    config.validate()?;
    if config.m * config.n > TANGENT_CAP {
        return Err(Error::invalid(format!(
            "tangent table {} x {} exceeds the cap m*n <= {TANGENT_CAP}",
            config.m, config.n
        )));
    }
    let basis = SpectralBasis::new(config.n)?;
    let beta = sheet.coarsen_to(config.m, config.n)?.to_beta();
    tangent_table(config, &basis, &beta, x_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sample mean of `hnorm2^(-ρ)` with its standard error.
pub fn negative_moment_estimate(records: &[MalliavinRecord], rho: f64) -> Result<MomentEstimate> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid(format!("rho must lie in (0, 1], got {rho}")));
    }
    if records.len() < 2 {
        return Err(Error::invalid("negative moment estimate needs at least two records"));
    }
    if let Some(sample) = records.iter().position(|r| !(r.hnorm2 > 0.0)) {
        return Err(Error::Degenerate { sample });
    }
    let values: Vec<f64> = records.iter().map(|r| r.hnorm2.powf(-rho)).collect();
    let (mean, std_error) = crate::experiments::stats::mean_and_std_error(&values);
    Ok(MomentEstimate { mean, std_error, samples: values.len() })
}

/// `Σ_{i,k} τ·h_B·(D^A(i, ⌊k/r⌋) - D^B(i, k))²` with `D` the derivative
/// with respect to sheet increments and `r = n_B / n_A`: the squared
/// H-distance of the two derivative kernels, the coarse one being constant
/// on each aggregated cell. Both records must share `m`.
pub fn malliavin_distance(coarse: &MalliavinRecord, fine: &MalliavinRecord, t_final: f64) -> Result<f64> {
    if coarse.m != fine.m {
        return Err(Error::invalid(format!("time grids differ: {} vs {}", coarse.m, fine.m)));
    }
    if !fine.n.is_multiple_of(coarse.n) {
        return Err(Error::invalid(format!("{} cells do not nest in {}", coarse.n, fine.n)));
    }
    let r = fine.n / coarse.n;
    let weight = (t_final / fine.m as f64) * (PI / fine.n as f64);
    let mut total = 0.0;
    for i in 0..fine.m {
        let row: f64 = (0..fine.n)
            .map(|k| {
                let d = coarse.sheet_derivative(i, k / r) - fine.sheet_derivative(i, k);
                d * d
            })
            .sum();
        total += row;
    }
    Ok(weight * total)
}

/// Malliavin distance between levels `n_a` and `n_b` driven by one sheet.
pub fn malliavin_error(
    config: &SolverConfig,
    n_a: usize,
    n_b: usize,
    sheet: &SheetIncrements,
    x_star: f64,
) -> Result<f64> {
    let a = hnorm2_at(&config.with_levels(n_a, config.m), sheet, x_star)?;
    let b = hnorm2_at(&config.with_levels(n_b, config.m), sheet, x_star)?;
    malliavin_distance(&a, &b, config.t_final)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::generate;
    use crate::solver::initial_field;

    #[test]
    fn injection_against_direct_transform() {
        let n = 8;
        let basis = SpectralBasis::new(n).unwrap();
        let u = initial_field(&Default::default(), basis.mesh());
        let tau = 0.01;
        let c = 0.7;
        let t = tangent_inject(&u, 0, 3, &basis, tau, &Diffusion::Constant { c }).unwrap();
        let s = (n as f64 / PI).sqrt();
        for kk in 1..n {
            let want: f64 = (1..n)
                .map(|j| {
                    let l = basis.eigenvalues()[j - 1];
                    c * s * (-l * l * tau).exp() * basis.eigenvector_entry(j, 3) * basis.eigenvector_entry(j, kk)
                })
                .sum();
            assert!((t.values.at_node(kk) - want).abs() < 1e-13);
        }
        let zero = tangent_inject(&u, 0, 3, &basis, tau, &Diffusion::Constant { c: 0.0 }).unwrap();
        assert_eq!(zero.values.max_abs(), 0.0);
        let ident = tangent_inject(&u, 0, 3, &basis, 0.0, &Diffusion::Constant { c }).unwrap();
        assert!((ident.values.at_node(3) - s * c).abs() < 1e-14);
        assert!(tangent_inject(&u, 0, 0, &basis, tau, &Diffusion::default()).is_err());
    }

    #[test]
    fn linear_transport_is_semigroup() {
        let basis = SpectralBasis::new(8).unwrap();
        let u = Field::from_fn(basis.mesh(), |x| x.sin());
        let t = tangent_inject(&u, 0, 2, &basis, 0.01, &Diffusion::Constant { c: 1.0 }).unwrap();
        let next =
            tangent_step(&t, &u, &[0.5; 7], &basis, 0.01, &Drift::Zero, &Diffusion::Constant { c: 1.0 }).unwrap();
        let again = tangent_inject(&u, 0, 2, &basis, 0.02, &Diffusion::Constant { c: 1.0 }).unwrap();
        for (a, b) in next.values.values().iter().zip(again.values.values()) {
            assert!((a - b).abs() < 1e-13);
        }
        let zero = TangentField { values: Field::zeros(basis.mesh()), ..t };
        let out = tangent_step(&zero, &u, &[0.5; 7], &basis, 0.01, &Drift::default(), &Diffusion::default()).unwrap();
        assert_eq!(out.values.max_abs(), 0.0);
    }

    #[test]
    fn linear_closed_form_hnorm() {
        let (n, m, t) = (8, 8, 0.1);
        let c = 0.8;
        let cfg =
            SolverConfig { drift: Drift::Zero, diffusion: Diffusion::Constant { c }, ..SolverConfig::new(n, m, t) };
        let sheet = generate(5, 0, m, n, t).unwrap();
        let rec = hnorm2_at(&cfg, &sheet, PI / 2.0).unwrap();
        let basis = SpectralBasis::new(n).unwrap();
        let tau = t / m as f64;
        let ks = n / 2;
        let mut want = 0.0;
        for i in 0..m {
            let age = (m - i) as f64 * tau;
            for k in 1..n {
                let e: f64 = (1..n)
                    .map(|j| {
                        let l = basis.eigenvalues()[j - 1];
                        (-l * l * age).exp() * basis.eigenvector_entry(j, k) * basis.eigenvector_entry(j, ks)
                    })
                    .sum();
                want += tau * c * c * (n as f64 / PI) * e * e;
            }
        }
        assert!((rec.hnorm2 - want).abs() < 1e-8 * want.max(1.0));
    }

    #[test]
    fn cap_enforced() {
        let cfg = SolverConfig::new(128, 128, 0.1);
        let sheet = generate(0, 0, 128, 128, 0.1).unwrap();
        assert!(hnorm2_at(&cfg, &sheet, 1.0).is_err());
    }

    #[test]
    fn negative_moments() {
        let rec = |h: f64| MalliavinRecord { hnorm2: h, x_star: 1.0, value: 0.0, m: 1, n: 2, table: vec![0.0; 2] };
        let est = negative_moment_estimate(&[rec(4.0), rec(4.0), rec(4.0)], 0.5).unwrap();
        assert!((est.mean - 0.5).abs() < 1e-15);
        assert_eq!(est.std_error, 0.0);
        assert!(negative_moment_estimate(&[rec(4.0), rec(4.0)], 0.0).is_err());
        assert!(matches!(negative_moment_estimate(&[rec(1.0), rec(0.0)], 0.5), Err(Error::Degenerate { sample: 1 })));
    }

    #[test]
    fn distance_of_identical_levels_is_zero() {
        let cfg = SolverConfig::new(8, 8, 0.1);
        let sheet = generate(1, 0, 8, 16, 0.1).unwrap();
        assert_eq!(malliavin_error(&cfg, 8, 8, &sheet, PI / 2.0).unwrap(), 0.0);
        assert!(malliavin_error(&cfg, 8, 16, &sheet, PI / 2.0).unwrap() > 0.0);
    }
}
