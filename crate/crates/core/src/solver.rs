//! Exponential Euler full discretization
//!
//! ```text
//! U_{i+1} = E_τ [ U_i + τ·A_n F(U_i) + √(n/π)·σ(U_i) ∘ Δβ_i ],   E_τ = exp(-A_n² τ),
//! ```
//!
//! evaluated in the sine basis: the drift is transformed and weighted by
//! `λ_{j,n}`, every mode is damped by `e^{-λ_{j,n}² τ}`, and one inverse
//! transform returns to grid values. Only grid times `t_i = iτ` are produced.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DstWorkspace, Field, Mesh, SpectralBasis};
use crate::models::{Diffusion, Drift, InitialData};
use crate::noise::{BetaIncrements, SheetIncrements};

/// States whose max-norm exceeds this are treated as blown up.
pub const OVERFLOW_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordPolicy {
    #[default]
    TerminalOnly,
    AllSteps,
    /// Every `s`-th step plus the terminal step.
    Stride(usize),
}

impl RecordPolicy {
    fn records(&self, i: usize, m: usize) -> bool {
        match *self {
            RecordPolicy::TerminalOnly => i == m,
            RecordPolicy::AllSteps => true,
            RecordPolicy::Stride(s) => i.is_multiple_of(s) || i == m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub initial: InitialData,
    pub record: RecordPolicy,
}

impl SolverConfig {
    /// Default coefficients (`f = sin`, `σ = 1 + ½ sin`, `u₀ = sin`).
    pub fn new(n: usize, m: usize, t_final: f64) -> Self {
        Self {
            n,
            m,
            t_final,
            drift: Drift::default(),
            diffusion: Diffusion::default(),
            initial: InitialData::default(),
            record: RecordPolicy::TerminalOnly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("n must be >= 2, got {}", self.n)));
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be >= 1"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(format!("T must be positive, got {}", self.t_final)));
        }
        if let RecordPolicy::Stride(0) = self.record {
            return Err(Error::invalid("record stride must be >= 1"));
        }
        self.drift.validate()?;
        self.diffusion.validate()?;
        self.initial.validate()
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.m as f64
    }

    pub fn with_levels(&self, n: usize, m: usize) -> Self {
        Self { n, m, ..self.clone() }
    }
}

/// Recorded states of one run; `steps[r]` is the time index of `states[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub steps: Vec<usize>,
    pub states: Vec<Field>,
}

impl Trajectory {
    pub fn time(&self, r: usize) -> f64 {
        self.steps[r] as f64 * self.config.tau()
    }

    /// Last recorded state (the terminal one for every policy).
    pub fn terminal(&self) -> &Field {
        self.states.last().expect("trajectory records the terminal state")
    }
}

/// `v_k = u₀(kh)`.
pub fn initial_field(initial: &InitialData, mesh: Mesh) -> Field {
    Field::from_fn(mesh, |x| initial.eval(x))
}

/// One exponential Euler step with reusable buffers.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    basis: &'a SpectralBasis,
    drift: Drift,
    diffusion: Diffusion,
    noise_scale: f64,
    decay: Vec<f64>,
    tau_lambda: Vec<f64>,
    ws: DstWorkspace,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(basis: &'a SpectralBasis, tau: f64, drift: Drift, diffusion: Diffusion) -> Self {
        let len = basis.n() - 1;
        let lam = basis.eigenvalues();
        Self {
            basis,
            drift,
            diffusion,
            noise_scale: (basis.n() as f64 / std::f64::consts::PI).sqrt(),
            decay: lam.iter().map(|l| (-l * l * tau).exp()).collect(),
            tau_lambda: lam.iter().map(|l| tau * l).collect(),
            ws: basis.plan().workspace(),
            a: vec![0.0; len],
            b: vec![0.0; len],
            c: vec![0.0; len],
        }
    }

    pub fn basis(&self) -> &SpectralBasis {
        self.basis
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    /// `E_τ` mode multipliers.
    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    /// `τ·λ_{j,n}` mode multipliers.
    pub fn tau_lambda(&self) -> &[f64] {
        &self.tau_lambda
    }

    /// Advances interior values `u` in place; `dbeta` holds cells `1..n-1`.
    pub fn advance(&mut self, u: &mut [f64], dbeta: &[f64]) {
        let plan = self.basis.plan();
        let s = self.noise_scale;
        for ((a, &x), &db) in self.a.iter_mut().zip(u.iter()).zip(dbeta) {
            *a = x + s * self.diffusion.eval(x) * db;
        }
        plan.transform(&self.a, &mut self.c, &mut self.ws);
        if !self.drift.is_zero() {
            for (b, &x) in self.b.iter_mut().zip(u.iter()) {
                *b = self.drift.eval(x);
            }
            plan.transform(&self.b, &mut self.a, &mut self.ws);
            for ((c, &fa), &tl) in self.c.iter_mut().zip(&self.a).zip(&self.tau_lambda) {
                *c += tl * fa;
            }
        }
        for (c, &d) in self.c.iter_mut().zip(&self.decay) {
            *c *= d;
        }
        plan.transform(&self.c, u, &mut self.ws);
    }
}

/// `U⁺ = E_τ[U + τ A_n F(U) + √(n/π) σ(U)∘Δβ]`.
pub fn step(
    u: &Field,
    dbeta: &[f64],
    basis: &SpectralBasis,
    tau: f64,
    drift: &Drift,
    diffusion: &Diffusion,
) -> Result<Field> {
    if u.mesh().n() != basis.n() {
        return Err(Error::DimensionMismatch { expected: basis.n() - 1, actual: u.values().len() });
    }
    if dbeta.len() != basis.n() - 1 {
        return Err(Error::DimensionMismatch { expected: basis.n() - 1, actual: dbeta.len() });
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("step size must be nonnegative, got {tau}")));
    }
    let mut values = u.values().to_vec();
    Stepper::new(basis, tau, *drift, *diffusion).advance(&mut values, dbeta);
    Field::from_values(u.mesh(), values).map_err(|_| Error::Overflow { step: 1, norm: f64::INFINITY })
}

fn check_state(u: &[f64], step: usize) -> Result<()> {
    let norm = u.iter().fold(0.0_f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) });
    if norm.is_nan() || norm > OVERFLOW_THRESHOLD {
        return Err(Error::Overflow { step, norm });
    }
    Ok(())
}

/// Runs the scheme on `beta` (already at resolution `(m, n)`), calling
/// `observe(i, U_i)` for `i = 0..=m`. Returns the terminal interior values.
pub fn evolve(
    config: &SolverConfig,
    basis: &SpectralBasis,
    beta: &BetaIncrements,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    if basis.n() != config.n {
        return Err(Error::DimensionMismatch { expected: config.n - 1, actual: basis.n() - 1 });
    }
    if beta.m() != config.m || beta.n() != config.n {
        return Err(Error::invalid(format!(
            "noise grid {} x {} does not match scheme {} x {}",
            beta.m(),
            beta.n(),
            config.m,
            config.n
        )));
    }
    let mut u = initial_field(&config.initial, basis.mesh()).into_values();
    observe(0, &u);
    let mut stepper = Stepper::new(basis, config.tau(), config.drift, config.diffusion);
    for i in 0..config.m {
        stepper.advance(&mut u, beta.step(i));
        check_state(&u, i + 1)?;
        observe(i + 1, &u);
    }
    Ok(u)
}

fn aggregate(config: &SolverConfig, sheet: &SheetIncrements) -> Result<BetaIncrements> {
    let rel = (sheet.t_final() - config.t_final).abs() / config.t_final;
    if rel > 1e-12 {
        return Err(Error::invalid(format!(
            "sheet horizon {} differs from scheme horizon {}",
            sheet.t_final(),
            config.t_final
        )));
    }
    Ok(sheet.coarsen_to(config.m, config.n)?.to_beta())
}

/// Like [`simulate`] but reuses `basis` and reports every state to `observe`.
pub fn simulate_observed(
    config: &SolverConfig,
    basis: &SpectralBasis,
    sheet: &SheetIncrements,
    observe: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    evolve(config, basis, &aggregate(config, sheet)?, observe)
}

/// Simulates on the `(m, n)` aggregation of `sheet`, recording per policy.
pub fn simulate(config: &SolverConfig, sheet: &SheetIncrements) -> Result<Trajectory> {
    config.validate()?;
    let basis = SpectralBasis::new(config.n)?;
    let mesh = basis.mesh();
    let mut steps = Vec::new();
    let mut states = Vec::new();
    simulate_observed(config, &basis, sheet, |i, u| {
        if config.record.records(i, config.m) {
            steps.push(i);
            states.push(Field::from_values(mesh, u.to_vec()).expect("state checked finite"));
        }
    })?;
    Ok(Trajectory { config: config.clone(), steps, states })
}

/// Fine-step proxy for the time-continuous semi-discrete solution: runs with
/// `m_ref` steps and records the states at the grid times of `config.m`.
pub fn semidiscrete_reference(config: &SolverConfig, m_ref: usize, sheet: &SheetIncrements) -> Result<Trajectory> {
    if m_ref < 64 * config.m || !m_ref.is_multiple_of(config.m) {
        return Err(Error::invalid(format!(
            "reference steps {m_ref} must be a multiple of {} and at least 64 times it",
            config.m
        )));
    }
    let fine = SolverConfig { m: m_ref, record: RecordPolicy::AllSteps, ..config.clone() };
    let ratio = m_ref / config.m;
    let full = simulate(&fine, sheet)?;
    let mut steps = Vec::new();
    let mut states = Vec::new();
    for (i, state) in full.steps.iter().zip(full.states) {
        let coarse = i / ratio;
        if i % ratio == 0 && config.record.records(coarse, config.m) {
            steps.push(coarse);
            states.push(state);
        }
    }
    Ok(Trajectory { config: config.clone(), steps, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::naive_dst;
    use crate::noise::generate;

    fn linear(n: usize, m: usize, t: f64) -> SolverConfig {
        SolverConfig { drift: Drift::Zero, diffusion: Diffusion::Constant { c: 0.0 }, ..SolverConfig::new(n, m, t) }
    }

    #[test]
    fn initial_field_values() {
        let mesh = Mesh::new(8).unwrap();
        let f = initial_field(&InitialData::default(), mesh);
        assert!((f.at_node(4) - 1.0).abs() < 1e-15);
        let g = initial_field(&InitialData::SineMode { j: 2, a: 3.0 }, mesh);
        for k in 1..8 {
            assert_eq!(g.at_node(k), 3.0 * (2.0 * mesh.node(k)).sin());
        }
        assert_eq!(initial_field(&InitialData::zero(), mesh).max_abs(), 0.0);
    }

    #[test]
    fn linear_mode_decays_exactly() {
        let basis = SpectralBasis::new(16).unwrap();
        let tau = 0.01;
        for j in [1, 5, 15] {
            let e = basis.eigenvector(j);
            let out = step(&e, &[0.3; 15], &basis, tau, &Drift::Zero, &Diffusion::Constant { c: 0.0 }).unwrap();
            let l = basis.eigenvalues()[j - 1];
            for (a, b) in out.values().iter().zip(e.values()) {
                assert!((a - (-l * l * tau).exp() * b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let basis = SpectralBasis::new(12).unwrap();
        let u = Field::from_fn(basis.mesh(), |x| x.sin() + 0.2 * (3.0 * x).sin());
        let out = step(&u, &[0.0; 11], &basis, 0.0, &Drift::default(), &Diffusion::default()).unwrap();
        for (a, b) in out.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn step_rejects_size_mismatch() {
        let basis = SpectralBasis::new(8).unwrap();
        let u = Field::zeros(basis.mesh());
        assert!(step(&u, &[0.0; 6], &basis, 0.1, &Drift::Zero, &Diffusion::default()).is_err());
        let other = Field::zeros(Mesh::new(4).unwrap());
        assert!(step(&other, &[0.0; 7], &basis, 0.1, &Drift::Zero, &Diffusion::default()).is_err());
    }

    #[test]
    fn single_step_matches_mode_formula() {
        let n = 16;
        let basis = SpectralBasis::new(n).unwrap();
        let cfg = SolverConfig { diffusion: Diffusion::Constant { c: 0.0 }, ..SolverConfig::new(n, 1, 0.1) };
        let sheet = generate(3, 0, 1, n, 0.1).unwrap();
        let got = simulate(&cfg, &sheet).unwrap();
        let u0 = initial_field(&cfg.initial, basis.mesh());
        let uh = naive_dst(u0.values());
        let fh = naive_dst(&u0.values().iter().map(|x| x.sin()).collect::<Vec<_>>());
        let coeffs: Vec<f64> = (0..n - 1)
            .map(|j| {
                let l = basis.eigenvalues()[j];
                (-l * l * 0.1).exp() * (uh[j] + 0.1 * l * fh[j])
            })
            .collect();
        let want = naive_dst(&coeffs);
        for (a, b) in got.terminal().values().iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_exactness() {
        for n in [4, 16, 128] {
            for m in [1, 7, 64] {
                let cfg = linear(n, m, 0.3);
                let sheet = generate(0, 0, m, n, 0.3).unwrap();
                let traj = simulate(&cfg, &sheet).unwrap();
                let l = SpectralBasis::new(n).unwrap().eigenvalues()[0];
                let decay = (-l * l * 0.3).exp();
                let mesh = Mesh::new(n).unwrap();
                for k in 1..n {
                    assert!((traj.terminal().at_node(k) - decay * mesh.node(k).sin()).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn deterministic_fine_step_agreement() {
        let n = 16;
        let cfg = SolverConfig { diffusion: Diffusion::Constant { c: 0.0 }, ..SolverConfig::new(n, 256, 0.1) };
        let fine = cfg.with_levels(n, 256 * 64);
        let sheet = generate(0, 0, 256 * 64, n, 0.1).unwrap();
        let a = simulate(&cfg, &sheet).unwrap();
        let b = simulate(&fine, &sheet).unwrap();
        let num = a.terminal().values().iter().zip(b.terminal().values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        let den = b.terminal().values().iter().map(|y| y * y).sum::<f64>();
        assert!((num / den).sqrt() < 1e-4, "{}", (num / den).sqrt());
    }

    #[test]
    fn record_policies() {
        let sheet = generate(1, 1, 8, 8, 0.1).unwrap();
        let mut cfg = SolverConfig::new(8, 8, 0.1);
        assert_eq!(simulate(&cfg, &sheet).unwrap().steps, vec![8]);
        cfg.record = RecordPolicy::AllSteps;
        let all = simulate(&cfg, &sheet).unwrap();
        assert_eq!(all.steps, (0..=8).collect::<Vec<_>>());
        assert_eq!(all.states[0], initial_field(&cfg.initial, Mesh::new(8).unwrap()));
        cfg.record = RecordPolicy::Stride(3);
        let s = simulate(&cfg, &sheet).unwrap();
        assert_eq!(s.steps, vec![0, 3, 6, 8]);
        assert_eq!(s.terminal(), all.terminal());
        assert!((s.time(1) - 0.0375).abs() < 1e-15);
    }

    #[test]
    fn reproducible_and_coupled() {
        let sheet = generate(9, 2, 64, 32, 0.1).unwrap();
        let cfg = SolverConfig::new(16, 32, 0.1);
        let a = simulate(&cfg, &sheet).unwrap();
        let b = simulate(&cfg, &sheet).unwrap();
        assert_eq!(a, b);
        let direct = simulate(&cfg, &sheet.coarsen_to(32, 16).unwrap()).unwrap();
        assert_eq!(a.terminal(), direct.terminal());
    }

    #[test]
    fn boundary_interpolation_vanishes() {
        let sheet = generate(4, 0, 16, 8, 0.1).unwrap();
        let traj = simulate(&SolverConfig::new(8, 16, 0.1), &sheet).unwrap();
        assert_eq!(traj.terminal().interpolate(0.0).unwrap(), 0.0);
        assert_eq!(traj.terminal().interpolate(std::f64::consts::PI).unwrap(), 0.0);
    }

    #[test]
    fn horizon_and_grid_checks() {
        let sheet = generate(0, 0, 8, 8, 0.2).unwrap();
        assert!(simulate(&SolverConfig::new(8, 8, 0.1), &sheet).is_err());
        assert!(simulate(&SolverConfig::new(8, 3, 0.2), &sheet).is_err());
        assert!(simulate(&SolverConfig::new(16, 8, 0.2), &sheet).is_err());
        assert!(simulate(&SolverConfig { record: RecordPolicy::Stride(0), ..SolverConfig::new(8, 8, 0.2) }, &sheet)
            .is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let cfg = SolverConfig { diffusion: Diffusion::Constant { c: 1e14 }, ..SolverConfig::new(8, 4, 0.1) };
        let sheet = generate(0, 0, 4, 8, 0.1).unwrap();
        assert!(matches!(simulate(&cfg, &sheet), Err(Error::Overflow { step: 1, .. })));
    }

    #[test]
    fn semidiscrete_reference_linear_independent_of_refinement() {
        let cfg = linear(8, 2, 0.1);
        let sheet = generate(0, 0, 256, 8, 0.1).unwrap();
        let a = semidiscrete_reference(&cfg, 128, &sheet).unwrap();
        let b = semidiscrete_reference(&cfg, 256, &sheet).unwrap();
        for (x, y) in a.terminal().values().iter().zip(b.terminal().values()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(semidiscrete_reference(&cfg, 64, &sheet).is_err());
    }
}
