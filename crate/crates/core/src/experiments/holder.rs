//! Mean-square Hölder increments of the fine solution.
//!
//! Time: `E|u(T, x*) - u(T - gτ, x*)|²` over gaps `g` (in steps).
//! Space: `E|u(T, x* - dh/2) - u(T, x* + dh/2)|²` over separations `d` (in
//! cells, even) centred on the node nearest `x*`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_horizon, check_point, check_samples, run_samples, stats, Model, RateReport, Window};
use crate::error::{Error, Result};
use crate::grid::SpectralBasis;
use crate::noise::generate;
use crate::solver::evolve;

/// Gaps must stay this many cells (or steps) away from the boundary and
/// from `t = 0`.
pub const MIN_CLEARANCE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolderPlan {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub samples: usize,
    pub x_star: f64,
    pub time_gaps: Vec<usize>,
    pub space_gaps: Vec<usize>,
    pub time_window: Window,
    pub space_window: Window,
}

impl Default for HolderPlan {
    fn default() -> Self {
        Self {
            n: 64,
            m: 4096,
            t_final: 0.25,
            samples: 400,
            x_star: PI / 2.0,
            time_gaps: (3..=10).map(|p| 1 << p).collect(),
            space_gaps: vec![4, 8, 16],
            time_window: Window::between(0.6, 0.9),
            space_window: Window::between(1.6, 2.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub time: RateReport,
    pub space: RateReport,
    pub pass: bool,
}

struct Layout {
    centre: usize,
    time_steps: Vec<usize>,
    space_pairs: Vec<(usize, usize)>,
}

fn layout(plan: &HolderPlan) -> Result<Layout> {
    let increasing = |v: &[usize]| v.len() >= 3 && v.windows(2).all(|w| w[0] < w[1]);
    if !increasing(&plan.time_gaps) || !increasing(&plan.space_gaps) {
        return Err(Error::invalid("holder: gap ladders need at least 3 strictly increasing entries"));
    }
    let mesh = crate::grid::Mesh::new(plan.n)?;
    let centre = mesh.nearest_node(plan.x_star);
    let mut time_steps = Vec::new();
    for &g in &plan.time_gaps {
        if g < MIN_CLEARANCE || g + MIN_CLEARANCE > plan.m {
            return Err(Error::invalid(format!(
                "holder: time gap {g} leaves fewer than {MIN_CLEARANCE} steps of clearance"
            )));
        }
        time_steps.push(plan.m - g);
    }
    let mut space_pairs = Vec::new();
    for &d in &plan.space_gaps {
        let half = d / 2;
        if d % 2 != 0 || half + MIN_CLEARANCE > centre || centre + half + MIN_CLEARANCE > plan.n {
            return Err(Error::invalid(format!(
                "holder: separation {d} must be even and stay {MIN_CLEARANCE} cells inside the boundary"
            )));
        }
        space_pairs.push((centre - half, centre + half));
    }
    Ok(Layout { centre, time_steps, space_pairs })
}

pub fn holder_study(plan: &HolderPlan, model: &Model, seed: u64) -> Result<HolderReport> {
    check_samples("holder", plan.samples, 50)?;
    check_horizon("holder", plan.t_final)?;
    check_point("holder", plan.x_star)?;
    model.validate()?;
    let lay = layout(plan)?;
    let cfg = model.config(plan.n, plan.m, plan.t_final);
    let basis = SpectralBasis::new(plan.n)?;

    let (rows, discarded) = run_samples(plan.samples, |s| {
        let sheet = generate(seed, s, plan.m, plan.n, plan.t_final)?;
        let mut past = vec![0.0; lay.time_steps.len()];
        let u = evolve(&cfg, &basis, &sheet.to_beta(), |i, u| {
            for (slot, &step) in past.iter_mut().zip(&lay.time_steps) {
                if step == i {
                    *slot = u[lay.centre - 1];
                }
            }
        })?;
        let now = u[lay.centre - 1];
        let time: Vec<f64> = past.iter().map(|p| (now - p) * (now - p)).collect();
        let space: Vec<f64> = lay.space_pairs.iter().map(|&(a, b)| (u[a - 1] - u[b - 1]).powi(2)).collect();
        Ok((time, space))
    })?;

    let (times, spaces): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    let reduce = |rows: &[Vec<f64>], count: usize| -> (Vec<f64>, Vec<f64>) {
        (0..count).map(|l| stats::mean_and_std_error(&rows.iter().map(|r| r[l]).collect::<Vec<_>>())).unzip()
    };
    let (te, tse) = reduce(&times, lay.time_steps.len());
    let (se, sse) = reduce(&spaces, lay.space_pairs.len());
    let time = RateReport::from_errors(
        "holder-time",
        plan.time_gaps.clone(),
        plan.m,
        te,
        tse,
        plan.time_window,
        None,
        plan.samples,
        discarded,
    )?;
    let space = RateReport::from_errors(
        "holder-space",
        plan.space_gaps.clone(),
        plan.n,
        se,
        sse,
        plan.space_window,
        None,
        plan.samples,
        discarded,
    )?;
    let pass = time.pass && space.pass;
    Ok(HolderReport { time, space, pass })
}
