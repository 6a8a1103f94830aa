//! Brownian sheet cell increments.
//!
//! A sheet realization is stored as the increments
//! `dW[i][k] = W([t_i, t_{i+1}] × [kh, (k+1)h])` on an `m × n` grid of
//! time-space cells, each `N(0, (T/m)(π/n))`. Coarser grids are obtained by
//! summing blocks of cells, so every level of a study sees the same path.
//!
//! Generation is counter based: cell `(i, k)` of sample `s` under master seed
//! `seed` always reads the same 256 bits of ChaCha8 output, namely stream
//! `s`, words `4c .. 4c+4` with `c = i·n + k`. The key is
//! `ChaCha8Rng::seed_from_u64(seed)`. The two 64-bit words become uniforms
//! `u = (w >> 11 + ½)·2⁻⁵³ ∈ (0, 1)` and one Box–Muller normal
//! `√(-2 ln u₁)·cos(2π u₂)`. Values therefore do not depend on thread count
//! or on the order in which samples are produced.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SheetIncrements {
    m: usize,
    n: usize,
    t_final: f64,
    seed: u64,
    sample_index: u64,
    dw: Vec<f64>,
}

#[inline]
fn unit_open(w: u64) -> f64 {
    ((w >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn check_dims(m: usize, n: usize, t_final: f64) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!("sheet dimensions must be positive, got {m} x {n}")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::invalid(format!("horizon T must be positive, got {t_final}")));
    }
    Ok(())
}

/// Draws the sheet for key `(seed, sample_index)` on `m` time cells and `n`
/// space cells over `[0, T] × [0, π]`.
pub fn generate(seed: u64, sample_index: u64, m: usize, n: usize, t_final: f64) -> Result<SheetIncrements> {
    check_dims(m, n, t_final)?;
    let sd = ((t_final / m as f64) * (PI / n as f64)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample_index);
    rng.set_word_pos(0);
    let dw = (0..m * n)
        .map(|_| {
            let u1 = unit_open(rng.next_u64());
            let u2 = unit_open(rng.next_u64());
            sd * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        })
        .collect();
    Ok(SheetIncrements { m, n, t_final, seed, sample_index, dw })
}

impl SheetIncrements {
    /// Wraps explicit increments; used for perturbation studies and tests.
    pub fn from_increments(m: usize, n: usize, t_final: f64, dw: Vec<f64>) -> Result<Self> {
        check_dims(m, n, t_final)?;
        if dw.len() != m * n {
            return Err(Error::DimensionMismatch { expected: m * n, actual: dw.len() });
        }
        Ok(Self { m, n, t_final, seed: 0, sample_index: 0, dw })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    /// Row-major increments, `dw[i*n + k]`.
    pub fn increments(&self) -> &[f64] {
        &self.dw
    }

    pub fn increments_mut(&mut self) -> &mut [f64] {
        &mut self.dw
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.dw[i * self.n + k]
    }

    /// Variance of a single cell increment, `(T/m)(π/n)`.
    pub fn cell_variance(&self) -> f64 {
        (self.t_final / self.m as f64) * (PI / self.n as f64)
    }

    /// Plain sum of all increments, `W([0,T] × [0,π])`.
    pub fn total(&self) -> f64 {
        self.dw.iter().sum()
    }

    /// Sums blocks of `time_factor × space_factor` cells.
    pub fn coarsen(&self, time_factor: usize, space_factor: usize) -> Result<SheetIncrements> {
        if time_factor == 0
            || space_factor == 0
            || !self.m.is_multiple_of(time_factor)
            || !self.n.is_multiple_of(space_factor)
        {
            return Err(Error::invalid(format!(
                "cannot coarsen {} x {} sheet by factors ({time_factor}, {space_factor})",
                self.m, self.n
            )));
        }
        if time_factor == 1 && space_factor == 1 {
            return Ok(self.clone());
        }
        let (mc, nc) = (self.m / time_factor, self.n / space_factor);
        let mut dw = vec![0.0; mc * nc];
        for ic in 0..mc {
            for kc in 0..nc {
                let mut acc = 0.0;
                for i in ic * time_factor..(ic + 1) * time_factor {
                    let row = &self.dw[i * self.n..(i + 1) * self.n];
                    acc += row[kc * space_factor..(kc + 1) * space_factor].iter().sum::<f64>();
                }
                dw[ic * nc + kc] = acc;
            }
        }
        Ok(SheetIncrements { m: mc, n: nc, dw, ..*self })
    }

    /// Coarsens to an `(m, n)` grid dividing this one.
    pub fn coarsen_to(&self, m: usize, n: usize) -> Result<SheetIncrements> {
        if m == 0 || n == 0 || !self.m.is_multiple_of(m) || !self.n.is_multiple_of(n) {
            return Err(Error::invalid(format!("sheet {} x {} cannot be aggregated to {m} x {n}", self.m, self.n)));
        }
        self.coarsen(self.m / m, self.n / n)
    }

    /// Scaled increments `Δβ_i^k = √(n/π)·dW[i][k]`, each with variance `T/m`.
    pub fn to_beta(&self) -> BetaIncrements {
        let s = (self.n as f64 / PI).sqrt();
        BetaIncrements { m: self.m, n: self.n, values: self.dw.iter().map(|w| s * w).collect() }
    }

    /// Little-endian dump: `m: u64, n: u64, T: f64, seed: u64, sample_index: u64`,
    /// then `m·n` row-major `f64` increments.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.m as u64).to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&self.t_final.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.sample_index.to_le_bytes())?;
        for v in &self.dw {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let m = u64::from_le_bytes(next(&mut r)?) as usize;
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let t_final = f64::from_le_bytes(next(&mut r)?);
        let seed = u64::from_le_bytes(next(&mut r)?);
        let sample_index = u64::from_le_bytes(next(&mut r)?);
        check_dims(m, n, t_final)?;
        let dw = (0..m * n).map(|_| next(&mut r).map(f64::from_le_bytes)).collect::<Result<_>>()?;
        Ok(Self { m, n, t_final, seed, sample_index, dw })
    }
}

pub fn coarsen(s: &SheetIncrements, time_factor: usize, space_factor: usize) -> Result<SheetIncrements> {
    s.coarsen(time_factor, space_factor)
}

pub fn to_beta(s: &SheetIncrements) -> BetaIncrements {
    s.to_beta()
}

/// `Δβ` increments in the same row-major layout as the sheet. Column 0 (the
/// cell `[0, h]`) is kept for layout but never enters the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaIncrements {
    m: usize,
    n: usize,
    values: Vec<f64>,
}

impl BetaIncrements {
    pub fn from_values(m: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || n < 2 {
            return Err(Error::invalid(format!("beta grid needs m >= 1 and n >= 2, got {m} x {n}")));
        }
        if values.len() != m * n {
            return Err(Error::DimensionMismatch { expected: m * n, actual: values.len() });
        }
        Ok(Self { m, n, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interior cells `k = 1..n-1` of time step `i`.
    pub fn step(&self, i: usize) -> &[f64] {
        &self.values[i * self.n + 1..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n + k]
    }

    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        self.values[i * self.n + k] = v;
    }
}
