//! Coefficient library: drift nonlinearities `f`, diffusion coefficients `σ`,
//! the smooth cutoff `K_R` and initial data `u₀`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum of `|K_R'|`: the quintic smoothstep slope at the band midpoint.
pub const CUTOFF_MAX_SLOPE: f64 = 15.0 / 8.0;

/// Even cutoff equal to 1 on `|x| < R` and 0 on `|x| ≥ R + 1`, joined by the
/// quintic smoothstep `s(t) = 6t⁵ - 15t⁴ + 10t³` (C², `|K_R'| ≤ 15/8`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub r: f64,
}

impl Cutoff {
    pub fn new(r: f64) -> Result<Self> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::invalid(format!("cutoff radius must be >= 1, got {r}")));
        }
        Ok(Self { r })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = x.abs() - self.r;
        if t < 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let t = x.abs() - self.r;
        if !(0.0..1.0).contains(&t) {
            0.0
        } else {
            let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
            -ds * x.signum()
        }
    }
}

pub fn eval_cutoff(k: &Cutoff, x: f64) -> f64 {
    k.eval(x)
}

/// Drift nonlinearity `f` (the equation carries `Δf(u)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Drift {
    Zero,
    /// `a·sin(x)`
    ScaledSine {
        a: f64,
    },
    /// `a·x / (1 + x²)`
    LipschitzRational {
        a: f64,
    },
    /// `a0·x³ + a1·x² + a2·x + a3`, `a0 > 0`
    Cubic {
        a0: f64,
        a1: f64,
        a2: f64,
        a3: f64,
    },
    /// `K_R(x)·(a0·x³ + a1·x² + a2·x + a3)`
    CubicCutoff {
        a0: f64,
        a1: f64,
        a2: f64,
        a3: f64,
        r: f64,
    },
}

impl Default for Drift {
    fn default() -> Self {
        Drift::ScaledSine { a: 1.0 }
    }
}

fn cubic(a: [f64; 4], x: f64) -> f64 {
    ((a[0] * x + a[1]) * x + a[2]) * x + a[3]
}

fn cubic_prime(a: [f64; 4], x: f64) -> f64 {
    (3.0 * a[0] * x + 2.0 * a[1]) * x + a[2]
}

/// `max |p|` and `max |p'|` of a cubic on `[-l, l]`, from endpoints and
/// critical points.
fn cubic_sup(a: [f64; 4], l: f64) -> (f64, f64) {
    let mut pts = vec![-l, l];
    // roots of p' = 3a0 x² + 2a1 x + a2
    let (qa, qb, qc) = (3.0 * a[0], 2.0 * a[1], a[2]);
    if qa != 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            pts.push((-qb + disc.sqrt()) / (2.0 * qa));
            pts.push((-qb - disc.sqrt()) / (2.0 * qa));
        }
    } else if qb != 0.0 {
        pts.push(-qc / qb);
    }
    let sup_p = pts.iter().filter(|x| x.abs() <= l).fold(0.0_f64, |m, &x| m.max(cubic(a, x).abs()));
    // p' is a parabola: extremes at endpoints or its vertex
    let mut dpts = vec![-l, l];
    if a[0] != 0.0 {
        dpts.push(-a[1] / (3.0 * a[0]));
    }
    let sup_dp = dpts.iter().filter(|x| x.abs() <= l).fold(0.0_f64, |m, &x| m.max(cubic_prime(a, x).abs()));
    (sup_p, sup_dp)
}

impl Drift {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            Drift::Zero => Ok(()),
            Drift::ScaledSine { a } | Drift::LipschitzRational { a } if finite(&[a]) => Ok(()),
            Drift::Cubic { a0, a1, a2, a3 } if finite(&[a0, a1, a2, a3]) => {
                if a0 > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("cubic drift needs a0 > 0, got {a0}")))
                }
            }
            Drift::CubicCutoff { a0, a1, a2, a3, r } if finite(&[a0, a1, a2, a3]) => {
                Cutoff::new(r)?;
                if a0 > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("cubic drift needs a0 > 0, got {a0}")))
                }
            }
            _ => Err(Error::invalid(format!("non-finite drift parameter in {self:?}"))),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Drift::Zero)
            || matches!(self, Drift::ScaledSine { a } | Drift::LipschitzRational { a } if *a == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::ScaledSine { a } => a * x.sin(),
            Drift::LipschitzRational { a } => a * x / (1.0 + x * x),
            Drift::Cubic { a0, a1, a2, a3 } => cubic([a0, a1, a2, a3], x),
            Drift::CubicCutoff { a0, a1, a2, a3, r } => Cutoff { r }.eval(x) * cubic([a0, a1, a2, a3], x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::ScaledSine { a } => a * x.cos(),
            Drift::LipschitzRational { a } => {
                let d = 1.0 + x * x;
                a * (1.0 - x * x) / (d * d)
            }
            Drift::Cubic { a0, a1, a2, a3 } => cubic_prime([a0, a1, a2, a3], x),
            Drift::CubicCutoff { a0, a1, a2, a3, r } => {
                let k = Cutoff { r };
                let p = [a0, a1, a2, a3];
                k.derivative(x) * cubic(p, x) + k.eval(x) * cubic_prime(p, x)
            }
        }
    }

    /// Declared global Lipschitz constant; `None` for the raw cubic. For the
    /// cutoff composite this is the bound `sup|p'| + (15/8)·sup|p|` over the
    /// support `[-R-1, R+1]`.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        match *self {
            Drift::Zero => Some(0.0),
            Drift::ScaledSine { a } | Drift::LipschitzRational { a } => Some(a.abs()),
            Drift::Cubic { .. } => None,
            Drift::CubicCutoff { a0, a1, a2, a3, r } => {
                let (sp, sdp) = cubic_sup([a0, a1, a2, a3], r + 1.0);
                Some(sdp + CUTOFF_MAX_SLOPE * sp)
            }
        }
    }
}

pub fn eval_drift(d: &Drift, x: f64) -> f64 {
    d.eval(x)
}

pub fn eval_drift_prime(d: &Drift, x: f64) -> f64 {
    d.derivative(x)
}

/// Adjacent-point estimate `max |f(x_{i+1}) - f(x_i)| / |x_{i+1} - x_i|` on a
/// uniform grid of `samples` points; a lower bound for the Lipschitz constant.
pub fn lipschitz_estimate(d: &Drift, lo: f64, hi: f64, samples: usize) -> Result<f64> {
    if !(lo < hi) || samples < 2 {
        return Err(Error::invalid(format!("need lo < hi and samples >= 2, got [{lo}, {hi}] x {samples}")));
    }
    let dx = (hi - lo) / (samples - 1) as f64;
    let mut prev = d.eval(lo);
    let mut best = 0.0_f64;
    for i in 1..samples {
        let x = if i == samples - 1 { hi } else { lo + i as f64 * dx };
        let v = d.eval(x);
        best = best.max((v - prev).abs() / dx);
        prev = v;
    }
    Ok(best)
}

/// Diffusion coefficient `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Diffusion {
    Constant {
        c: f64,
    },
    /// `b + a·sin(x)` with `|a| < b`
    ShiftedSine {
        b: f64,
        a: f64,
    },
}

impl Default for Diffusion {
    fn default() -> Self {
        Diffusion::ShiftedSine { b: 1.0, a: 0.5 }
    }
}

impl Diffusion {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Diffusion::Constant { c } if c.is_finite() => Ok(()),
            Diffusion::ShiftedSine { b, a } if b.is_finite() && a.is_finite() => {
                if a.abs() < b {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("shifted sine diffusion needs |a| < b, got b={b}, a={a}")))
                }
            }
            _ => Err(Error::invalid(format!("non-finite diffusion parameter in {self:?}"))),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Diffusion::Constant { c } => c,
            Diffusion::ShiftedSine { b, a } => b + a * x.sin(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Diffusion::Constant { .. } => 0.0,
            Diffusion::ShiftedSine { a, .. } => a * x.cos(),
        }
    }

    /// `sup |σ|`
    pub fn bound(&self) -> f64 {
        match *self {
            Diffusion::Constant { c } => c.abs(),
            Diffusion::ShiftedSine { b, a } => b + a.abs(),
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            Diffusion::Constant { .. } => 0.0,
            Diffusion::ShiftedSine { a, .. } => a.abs(),
        }
    }

    /// `σ₀ = inf |σ|`; positive exactly when the coefficient is nondegenerate.
    pub fn nondegeneracy(&self) -> f64 {
        match *self {
            Diffusion::Constant { c } => c.abs(),
            Diffusion::ShiftedSine { b, a } => b - a.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Diffusion::Constant { c } if *c == 0.0)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Diffusion::Constant { .. })
    }
}

pub fn eval_diffusion(s: &Diffusion, x: f64) -> f64 {
    s.eval(x)
}

pub fn eval_diffusion_prime(s: &Diffusion, x: f64) -> f64 {
    s.derivative(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineMode {
    pub j: u32,
    pub a: f64,
}

/// Initial data built from Dirichlet sine modes, so `u₀ = u₀'' = 0` at both
/// ends and `u₀ ∈ C^∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `a·sin(jx)`
    SineMode { j: u32, a: f64 },
    /// `Σ a_i·sin(j_i x)`
    SineCombo { modes: Vec<SineMode> },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::SineMode { j: 1, a: 1.0 }
    }
}

impl InitialData {
    pub fn zero() -> Self {
        InitialData::SineCombo { modes: Vec::new() }
    }

    pub fn modes(&self) -> Vec<SineMode> {
        match self {
            InitialData::SineMode { j, a } => vec![SineMode { j: *j, a: *a }],
            InitialData::SineCombo { modes } => modes.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for m in self.modes() {
            if m.j == 0 {
                return Err(Error::invalid("initial sine mode index must be >= 1"));
            }
            if !m.a.is_finite() {
                return Err(Error::invalid("initial sine amplitude must be finite"));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.modes().iter().map(|m| m.a * (m.j as f64 * x).sin()).sum()
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.modes()
            .iter()
            .map(|m| {
                let j = m.j as f64;
                -m.a * j * j * (j * x).sin()
            })
            .sum()
    }

    /// `max(|u₀(0)|, |u₀(π)|, |u₀''(0)|, |u₀''(π)|)`.
    pub fn compatibility_defect(&self) -> f64 {
        [self.eval(0.0), self.eval(PI), self.second_derivative(0.0), self.second_derivative(PI)]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
