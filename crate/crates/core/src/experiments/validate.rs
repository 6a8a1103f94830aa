//! Fast invariant suite: transforms, eigenpairs, cutoff, linear exactness
//! and the tangent finite-difference check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{apply_laplacian, naive_dst, Field, SpectralBasis};
use crate::malliavin::{bump_derivative, tangent_table};
use crate::models::{Cutoff, Diffusion, Drift, CUTOFF_MAX_SLOPE};
use crate::noise::generate;
use crate::solver::{simulate, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// `max_{i,j} |⟨e_i, e_j⟩ - δ_ij|` from explicit vectors.
pub fn gram_defect(n: usize) -> Result<f64> {
    let b = SpectralBasis::new(n)?;
    let vecs: Vec<Field> = (1..n).map(|j| b.eigenvector(j)).collect();
    let mut worst = 0.0_f64;
    for i in 0..n - 1 {
        for j in i..n - 1 {
            let dot: f64 = vecs[i].values().iter().zip(vecs[j].values()).map(|(a, b)| a * b).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - want).abs());
        }
    }
    Ok(worst)
}

/// `max_j ‖DST(e_j) - 1_j‖∞`: the fast transform applied to each explicit
/// basis vector must return the unit vector (the transform is symmetric,
/// so this is the Gram defect computed through the FFT).
pub fn transform_orthonormality_defect(n: usize) -> Result<f64> {
    let b = SpectralBasis::new(n)?;
    let plan = b.plan();
    let mut ws = plan.workspace();
    let mut out = vec![0.0; n - 1];
    let mut worst = 0.0_f64;
    for j in 1..n {
        let e = b.eigenvector(j);
        plan.transform(e.values(), &mut out, &mut ws);
        for (k, v) in out.iter().enumerate() {
            let want = if k + 1 == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    Ok(worst)
}

/// `max_j ‖δ_h e_j - λ_{j,n} e_j‖∞`.
pub fn eigen_residual(n: usize) -> Result<f64> {
    let b = SpectralBasis::new(n)?;
    let mut worst = 0.0_f64;
    for j in 1..n {
        let e = b.eigenvector(j);
        let l = b.eigenvalues()[j - 1];
        let le = apply_laplacian(&e);
        for (a, v) in le.values().iter().zip(e.values()) {
            worst = worst.max((a - l * v).abs());
        }
    }
    Ok(worst)
}

/// Number of `(j, n)` pairs violating `|-j² - λ_{j,n}| ≤ (π²/12)·j⁴/n²`.
pub fn eigen_gap_violations(n: usize) -> Result<usize> {
    let b = SpectralBasis::new(n)?;
    Ok(b.eigenvalues()
        .iter()
        .enumerate()
        .filter(|(i, &l)| {
            let j = (i + 1) as f64;
            let bound = PI * PI / 12.0 * j.powi(4) / (n as f64).powi(2);
            (-j * j - l).abs() > bound
        })
        .count())
}

/// Largest relative gap between propagated tangents and bump-and-rerun
/// differences over every cell of the `(n, m)` default problem at `(T, π/2)`.
pub fn tangent_fd_defect(n: usize, m: usize, t_final: f64, eps: f64, seed: u64) -> Result<f64> {
    let cfg = SolverConfig::new(n, m, t_final);
    let basis = SpectralBasis::new(n)?;
    let beta = generate(seed, 0, m, n, t_final)?.to_beta();
    let x = PI / 2.0;
    let rec = tangent_table(&cfg, &basis, &beta, x)?;
    let mut worst = 0.0_f64;
    for i in 0..m {
        for k in 1..n {
            let fd = bump_derivative(&cfg, &basis, &beta, i, k, eps, x)?;
            let t = rec.table[i * n + k];
            worst = worst.max((fd - t).abs() / t.abs());
        }
    }
    Ok(worst)
}

pub fn run_validation() -> Result<ValidationReport> {
    let mut checks = Vec::new();

    let gram = [2, 3, 8, 64, 256].iter().map(|&n| gram_defect(n)).collect::<Result<Vec<_>>>()?;
    checks.push(Check::at_most("dst_gram_n<=256", gram.iter().copied().fold(0.0, f64::max), 1e-12));
    let fast = [512, 1024, 4096].iter().map(|&n| transform_orthonormality_defect(n)).collect::<Result<Vec<_>>>()?;
    checks.push(Check::at_most("dst_orthonormality_n<=4096", fast.iter().copied().fold(0.0, f64::max), 1e-12));

    let mut worst = 0.0_f64;
    for n in [2, 3, 5, 17, 64, 100] {
        let x: Vec<f64> = (0..n - 1).map(|k| ((k * 7 + 3) as f64).sin()).collect();
        let fast = SpectralBasis::new(n)?.plan().apply(&x)?;
        for (a, b) in fast.iter().zip(naive_dst(&x)) {
            worst = worst.max((a - b).abs());
        }
    }
    checks.push(Check::at_most("dst_fast_vs_naive", worst, 1e-10));

    let res = [2, 8, 64, 512].iter().map(|&n| eigen_residual(n)).collect::<Result<Vec<_>>>()?;
    checks.push(Check::at_most("eigen_residual", res.iter().copied().fold(0.0, f64::max), 1e-10));
    let mut gaps = 0;
    let mut n = 2;
    while n <= 4096 {
        gaps += eigen_gap_violations(n)?;
        n *= 2;
    }
    checks.push(Check::at_most("eigen_gap_violations", gaps as f64, 0.0));

    let k = Cutoff::new(2.0)?;
    let slope = (0..=100_000).map(|i| k.derivative(2.0 + i as f64 / 100_000.0).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("cutoff_slope_defect", (slope - CUTOFF_MAX_SLOPE).abs(), 1e-9));
    let plateau = [0.0, 1.0, 1.99, -1.5].iter().map(|&x| (k.eval(x) - 1.0).abs()).fold(0.0, f64::max)
        + [3.0, -3.0, 10.0].iter().map(|&x| k.eval(x).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("cutoff_plateau_defect", plateau, 0.0));

    let mut lin = 0.0_f64;
    for n in [4, 16, 64] {
        for m in [1, 8, 64] {
            let cfg = SolverConfig {
                drift: Drift::Zero,
                diffusion: Diffusion::Constant { c: 0.0 },
                ..SolverConfig::new(n, m, 0.2)
            };
            let traj = simulate(&cfg, &generate(0, 0, m, n, 0.2)?)?;
            let l = SpectralBasis::new(n)?.eigenvalues()[0];
            let d = (-l * l * 0.2).exp();
            for (k, v) in traj.terminal().values().iter().enumerate() {
                lin = lin.max((v - d * ((k + 1) as f64 * PI / n as f64).sin()).abs());
            }
        }
    }
    checks.push(Check::at_most("linear_exactness", lin, 1e-10));

    checks.push(Check::at_most("tangent_fd_relative", tangent_fd_defect(8, 8, 0.1, 1e-6, 0)?, 1e-3));

    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { checks, pass })
}
