//! Pointwise barrier and time-envelope audit along a rescaled run.

use serde::Serialize;

use crate::config::RunConfig;
use crate::dynamics::{run, WangReport};
use crate::error::{Error, Hypothesis, Result};
use crate::grid::Frame;

/// Relative slack allowed on both bounds.
pub const WANG_SLACK: f64 = 1e-3;
/// Envelope comparisons start here; the envelope is infinite at `s = 0`.
pub const ENVELOPE_FROM: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct WangAuditReport {
    pub config: RunConfig,
    pub initial: WangReport,
    /// Largest `v / (lambda u_inf)` over all samples and nodes `r > 0`.
    pub worst_barrier_ratio: f64,
    pub worst_barrier_s: f64,
    /// Largest `sup v / envelope(s)` over samples with `s >= ENVELOPE_FROM`.
    pub worst_envelope_ratio: f64,
    pub worst_envelope_s: f64,
    pub pass: bool,
}

pub fn run_wang_audit(cfg: &RunConfig) -> Result<WangAuditReport> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let problem = cfg.problem(&grid)?;
    problem.constants.require_equilibrium()?;
    let (trajectory, initial) = run(&problem, Frame::V, &cfg.controls())?;
    let initial = initial.expect("equilibrium exists");
    if !initial.holds {
        return Err(Error::hypothesis(
            Hypothesis::InitialBelowBarrier,
            format!("u0 <= lambda u_inf violated at r={} (ratio {:.4})", initial.r_at_max, initial.max_ratio),
        ));
    }

    let (mut wb, mut wb_s) = (f64::NEG_INFINITY, 0.0);
    let (mut we, mut we_s) = (f64::NEG_INFINITY, 0.0);
    for x in trajectory.all_samples() {
        if let Some(b) = x.barrier_ratio.filter(|&b| b > wb) {
            (wb, wb_s) = (b, x.s);
        }
        if x.s >= ENVELOPE_FROM {
            if let Some(m) = x.wang_margin {
                let envelope = m + x.sup_v;
                let ratio = x.sup_v / envelope;
                if ratio > we {
                    (we, we_s) = (ratio, x.s);
                }
            }
        }
    }
    Ok(WangAuditReport {
        config: cfg.clone(),
        initial,
        worst_barrier_ratio: wb,
        worst_barrier_s: wb_s,
        worst_envelope_ratio: we,
        worst_envelope_s: we_s,
        pass: wb <= 1.0 + WANG_SLACK && we <= 1.0 + WANG_SLACK,
    })
}
