//! Agreement between the original-frame and rescaled-frame integrations.

use serde::Serialize;

use crate::config::RunConfig;
use crate::dynamics::{evolve, make_initial_data, map_u_to_v_at, s_of_t, StepControls};
use crate::error::{Error, Hypothesis, Result};
use crate::grid::Frame;

/// Largest original time for which the scaled support stays on the grid.
pub const MAX_CROSS_FRAME_TIME: f64 = 1.0;

#[derive(Debug, Clone, Serialize)]
pub struct CrossFrameReport {
    pub config: RunConfig,
    pub t_max: f64,
    pub dt_u: f64,
    pub dt_v: f64,
    /// `||map(u) - v||_rho / ||v||_rho` at `s = ln(1 + t_max)`.
    pub discrepancy: f64,
}

/// Evolves `u` to `t_max` and `v` to `ln(1 + t_max)`, maps `u` and compares.
pub fn run_cross_frame_check(cfg: &RunConfig, t_max: f64, dt_u: f64, dt_v: f64) -> Result<CrossFrameReport> {
    cfg.validate()?;
    if !(0.0..=MAX_CROSS_FRAME_TIME).contains(&t_max) {
        return Err(Error::hypothesis(
            Hypothesis::CrossFrameHorizon,
            format!("t_max = {t_max} outside [0, {MAX_CROSS_FRAME_TIME}]"),
        ));
    }
    let report = |discrepancy| CrossFrameReport { config: cfg.clone(), t_max, dt_u, dt_v, discrepancy };
    if t_max == 0.0 {
        return Ok(report(0.0));
    }
    let grid = cfg.build_grid()?;
    let problem = cfg.problem(&grid)?;
    let (init, _) = make_initial_data(&grid, &cfg.problem)?;
    let base = cfg.controls();
    let sparse = |dt: f64, horizon: f64| StepControls { dt, dt_min: base.dt_min.min(dt), horizon, sample_every: usize::MAX, ..base };

    let s_max = s_of_t(t_max);
    let u = evolve(&problem, &init, Frame::U, &sparse(dt_u, t_max))?;
    let v = evolve(&problem, &init, Frame::V, &sparse(dt_v, s_max))?;
    let mapped = map_u_to_v_at(&grid, cfg.problem.p, &u.final_state, s_max)?;
    let diff: Vec<f64> = mapped.values.iter().zip(&v.final_state.values).map(|(a, b)| a - b).collect();
    Ok(report(grid.weighted_norm(&diff) / grid.weighted_norm(&v.final_state.values)))
}
