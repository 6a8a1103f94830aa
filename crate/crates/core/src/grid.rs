//! Uniform mesh on `[0, π]`, interior fields, difference stencils and the
//! orthonormal discrete sine basis that diagonalizes them.
//!
//! With `h = π/n` the vectors `e_j(k) = √(2/n)·sin(jkh)`, `j, k = 1..n-1`,
//! are an orthonormal eigenbasis of the Dirichlet second difference
//! `A_n = h⁻²·tridiag(1, -2, 1)` with eigenvalues
//!
//! ```text
//! λ_{j,n} = -j²·c_{j,n},   c_{j,n} = sin²(jπ/(2n)) / (jπ/(2n))²  ∈ [4/π², 1].
//! ```
//!
//! The transform matrix `[e_j(k)]` is symmetric and orthogonal, so the
//! forward and inverse DST-I are the same map.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// `sin(π·num/den)` with exact integer range reduction.
#[inline]
pub(crate) fn sin_pi_ratio(num: u64, den: u64) -> f64 {
    let r = num % (2 * den);
    (PI * r as f64 / den as f64).sin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    n: usize,
    h: f64,
}

impl Mesh {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("mesh needs n >= 2 cells, got {n}")));
        }
        Ok(Self { n, h: PI / n as f64 })
    }

    /// Number of cells.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior nodes, `n - 1`.
    pub fn interior(&self) -> usize {
        self.n - 1
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.n {
            PI
        } else {
            k as f64 * self.h
        }
    }

    /// Index of the cell containing `y`, i.e. `κ_n(y) = h·cell_index(y)`.
    /// `y = π` is assigned to the last cell.
    pub fn cell_index(&self, y: f64) -> usize {
        let k = (y / self.h).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n - 1)
        }
    }

    /// Floor-to-grid map `κ_n(y)`.
    pub fn snap_down(&self, y: f64) -> f64 {
        self.node(self.cell_index(y))
    }

    /// Nearest grid node index to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        ((x / self.h).round().max(0.0) as usize).min(self.n)
    }

    /// Polygonal interpolation of interior values (node `k` at index `k - 1`)
    /// at `x ∈ [0, π]`, with zero boundary values.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let k = self.cell_index(x);
        let theta = x / self.h - k as f64;
        let at = |k: usize| if k == 0 || k >= self.n { 0.0 } else { values[k - 1] };
        let (a, b) = (at(k), at(k + 1));
        a + theta * (b - a)
    }
}

/// Interior values of a grid function; boundary values are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: Mesh,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: Mesh) -> Self {
        Self { mesh, values: vec![0.0; mesh.interior()] }
    }

    /// Samples `f` at the interior nodes `kh`, `k = 1..n-1`.
    pub fn from_fn(mesh: Mesh, f: impl Fn(f64) -> f64) -> Self {
        let values = (1..mesh.n()).map(|k| f(mesh.node(k))).collect();
        Self { mesh, values }
    }

    pub fn from_values(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.interior() {
            return Err(Error::DimensionMismatch { expected: mesh.interior(), actual: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("field entry {} is not finite", k + 1)));
        }
        Ok(Self { mesh, values })
    }

    /// Indicator of interior node `k` (1-based, as on the mesh).
    pub fn unit(mesh: Mesh, k: usize) -> Result<Self> {
        if k == 0 || k >= mesh.n() {
            return Err(Error::invalid(format!("interior index {k} outside 1..{}", mesh.n() - 1)));
        }
        let mut f = Self::zeros(mesh);
        f.values[k - 1] = 1.0;
        Ok(f)
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    /// Interior values, index `k - 1` holds node `k`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at node `k ∈ 0..=n`, zero on the boundary.
    pub fn at_node(&self, k: usize) -> f64 {
        if k == 0 || k >= self.mesh.n() {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    /// Polygonal interpolation between nodes.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&x) {
            return Err(Error::invalid(format!("interpolation point {x} outside [0, π]")));
        }
        let k = self.mesh.cell_index(x);
        let theta = x / self.mesh.h() - k as f64;
        let (a, b) = (self.at_node(k), self.at_node(k + 1));
        Ok(a + theta * (b - a))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `(δ_h f)_k = (v_{k-1} - 2v_k + v_{k+1}) / h²` with `v_0 = v_n = 0`.
pub fn apply_laplacian(f: &Field) -> Field {
    let v = f.values();
    let len = v.len();
    let inv_h2 = 1.0 / (f.mesh.h() * f.mesh.h());
    let at = |i: isize| if i < 0 || i as usize >= len { 0.0 } else { v[i as usize] };
    let values = (0..len as isize).map(|i| (at(i - 1) - 2.0 * at(i) + at(i + 1)) * inv_h2).collect();
    Field { mesh: f.mesh, values }
}

/// Five-point `δ_h²` stencil. Ghost values outside `[0, π]` follow the
/// antisymmetric reflection `v_{-1} = -v_1`, `v_{n+1} = -v_{n-1}`, which makes
/// the stencil equal to `A_n²` applied as a matrix.
pub fn apply_bilaplacian(f: &Field) -> Field {
    let v = f.values();
    let n = f.mesh.n() as isize;
    let h2 = f.mesh.h() * f.mesh.h();
    let inv_h4 = 1.0 / (h2 * h2);
    // node value with zero boundary and odd reflection across it
    let node = |k: isize| -> f64 {
        if k == 0 || k == n {
            0.0
        } else if k < 0 {
            -v[(-k - 1) as usize]
        } else if k > n {
            -v[(2 * n - k - 1) as usize]
        } else {
            v[(k - 1) as usize]
        }
    };
    let values = (1..n)
        .map(|k| (node(k - 2) - 4.0 * node(k - 1) + 6.0 * node(k) - 4.0 * node(k + 1) + node(k + 2)) * inv_h4)
        .collect();
    Field { mesh: f.mesh, values }
}

/// Plan for the orthonormal DST-I of length `n - 1`, computed through a
/// complex FFT of the odd extension (length `2n`).
#[derive(Clone)]
pub struct DstPlan {
    n: usize,
    scale: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DstPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DstPlan").field("n", &self.n).finish()
    }
}

/// Scratch buffers for [`DstPlan::transform`]; one per worker.
#[derive(Debug, Clone)]
pub struct DstWorkspace {
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl DstPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("DST plan needs n >= 2, got {n}")));
        }
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        Ok(Self { n, scale: (2.0 / n as f64).sqrt(), fft })
    }

    /// Transform length, `n - 1`.
    pub fn len(&self) -> usize {
        self.n - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn workspace(&self) -> DstWorkspace {
        DstWorkspace {
            buf: vec![Complex::default(); 2 * self.n],
            scratch: vec![Complex::default(); self.fft.get_inplace_scratch_len()],
        }
    }

    /// `output[j-1] = Σ_k e_j(k)·input[k-1]`. `input` and `output` may not alias.
    pub fn transform(&self, input: &[f64], output: &mut [f64], ws: &mut DstWorkspace) {
        let n = self.n;
        debug_assert_eq!(input.len(), n - 1);
        debug_assert_eq!(output.len(), n - 1);
        let buf = &mut ws.buf;
        buf[0] = Complex::default();
        buf[n] = Complex::default();
        for (k, &x) in input.iter().enumerate() {
            buf[k + 1] = Complex::new(x, 0.0);
            buf[2 * n - k - 1] = Complex::new(-x, 0.0);
        }
        self.fft.process_with_scratch(buf, &mut ws.scratch);
        let s = -0.5 * self.scale;
        for (j, out) in output.iter_mut().enumerate() {
            *out = s * buf[j + 1].im;
        }
    }

    /// Allocating convenience wrapper around [`transform`](Self::transform).
    pub fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: input.len() });
        }
        let mut out = vec![0.0; self.len()];
        self.transform(input, &mut out, &mut self.workspace());
        Ok(out)
    }
}

/// O(n²) orthonormal DST-I by direct summation; the reference for [`DstPlan`].
pub fn naive_dst(input: &[f64]) -> Vec<f64> {
    let n = input.len() as u64 + 1;
    let scale = (2.0 / n as f64).sqrt();
    (1..n).map(|j| scale * (1..n).map(|k| sin_pi_ratio(j * k, n) * input[(k - 1) as usize]).sum::<f64>()).collect()
}

/// Eigen-decomposition of `A_n` together with the transform that applies it.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    mesh: Mesh,
    c: Vec<f64>,
    lambda: Vec<f64>,
    lambda_continuous: Vec<f64>,
    plan: DstPlan,
}

/// Builds the eigenpairs of `A_n` and a transform plan.
pub fn build_basis(n: usize) -> Result<SpectralBasis> {
    SpectralBasis::new(n)
}

impl SpectralBasis {
    pub fn new(n: usize) -> Result<Self> {
        let mesh = Mesh::new(n)?;
        let c: Vec<f64> = (1..n)
            .map(|j| {
                let a = j as f64 * PI / (2.0 * n as f64);
                let s = a.sin() / a;
                s * s
            })
            .collect();
        let lambda = c.iter().enumerate().map(|(i, c)| -((i + 1) as f64).powi(2) * c).collect();
        let lambda_continuous = (1..n).map(|j| -(j as f64).powi(2)).collect();
        Ok(Self { mesh, c, lambda, lambda_continuous, plan: DstPlan::new(n)? })
    }

    pub fn n(&self) -> usize {
        self.mesh.n()
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    /// `c_{j,n}` at index `j - 1`.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `λ_{j,n}` at index `j - 1`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    /// Continuous Dirichlet eigenvalues `λ_j = -j²` for the same `j` range.
    pub fn continuous_eigenvalues(&self) -> &[f64] {
        &self.lambda_continuous
    }

    pub fn plan(&self) -> &DstPlan {
        &self.plan
    }

    /// `e_j(k) = √(2/n)·sin(jkπ/n)`.
    pub fn eigenvector_entry(&self, j: usize, k: usize) -> f64 {
        let n = self.n() as u64;
        (2.0 / n as f64).sqrt() * sin_pi_ratio(j as u64 * k as u64, n)
    }

    pub fn eigenvector(&self, j: usize) -> Field {
        let values = (1..self.n()).map(|k| self.eigenvector_entry(j, k)).collect();
        Field { mesh: self.mesh, values }
    }

    /// `φ_j(kh) = √(2/π)·sin(jkh)`.
    pub fn mode_at_node(&self, j: usize, k: usize) -> f64 {
        (2.0 / PI).sqrt() * sin_pi_ratio(j as u64 * k as u64, self.n() as u64)
    }

    /// `φ_{j,n}(x)`: polygonal interpolant of `φ_j` through the grid nodes.
    pub fn interpolated_mode(&self, j: usize, x: f64) -> f64 {
        let k = self.mesh.cell_index(x);
        let theta = x / self.mesh.h() - k as f64;
        let a = self.mode_at_node(j, k);
        let b = self.mode_at_node(j, k + 1);
        a + theta * (b - a)
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.mesh.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n() - 1, actual: f.values.len() });
        }
        Ok(())
    }

    /// Coefficients `⟨f, e_j⟩`, `j = 1..n-1`.
    pub fn forward(&self, f: &Field) -> Result<Vec<f64>> {
        self.check(f)?;
        self.plan.apply(&f.values)
    }

    /// Field `Σ_j coeffs[j-1]·e_j`.
    pub fn inverse(&self, coeffs: &[f64]) -> Result<Field> {
        let values = self.plan.apply(coeffs)?;
        Ok(Field { mesh: self.mesh, values })
    }
}

pub fn dst_forward(basis: &SpectralBasis, f: &Field) -> Result<Vec<f64>> {
    basis.forward(f)
}

pub fn dst_inverse(basis: &SpectralBasis, coeffs: &[f64]) -> Result<Field> {
    basis.inverse(coeffs)
}
