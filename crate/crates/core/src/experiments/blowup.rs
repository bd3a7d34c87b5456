//! Blow-up from initial data of negative entropy.

use serde::Serialize;

use crate::config::RunConfig;
use crate::diagnostics::entropy;
use crate::dynamics::stepping::power_term;
use crate::dynamics::{evolve, make_initial_data, RunOutcome, RunStatus};
use crate::error::Result;
use crate::grid::{Frame, RadialGrid};

/// Relative size of `E(u0)` against its largest term below which the sign
/// is not trusted.
pub const SIGN_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyTerms {
    /// `int |v_r|^2 / 2 rho`.
    pub gradient: f64,
    /// `int v^2 / (2(p-1)) rho`.
    pub quadratic: f64,
    /// `int v^{p+1} / (p+1) rho`.
    pub power: f64,
}

impl EntropyTerms {
    pub fn compute(grid: &RadialGrid, p: f64, v: &[f64]) -> Self {
        let power: Vec<f64> = v.iter().map(|&x| power_term(x, p + 1.0)).collect();
        EntropyTerms {
            gradient: 0.5 * grid.dirichlet(v),
            quadratic: grid.weighted_inner(v, v) / (2.0 * (p - 1.0)),
            power: grid.weighted_integral(&power) / (p + 1.0),
        }
    }

    pub fn total(&self) -> f64 {
        self.gradient - self.quadratic - self.power
    }

    /// Whether `|E|` clears the quadrature tolerance relative to its terms.
    pub fn sign_resolved(&self) -> bool {
        let scale = self.gradient.max(self.quadratic).max(self.power);
        self.total().abs() > SIGN_TOLERANCE * scale
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NegativeEntropyReport {
    pub config: RunConfig,
    pub entropy_initial: f64,
    pub terms: EntropyTerms,
    /// False when `E(u0) >= 0` or its sign is unresolved; no outcome is asserted then.
    pub applicable: bool,
    pub note: String,
    pub outcome: Option<RunOutcome>,
    /// Rescaled time at the threshold crossing.
    pub s_at_threshold: Option<f64>,
    pub pass: bool,
}

/// Evolves data with `E(u0) < 0` in the rescaled frame and expects blow-up.
pub fn run_negative_entropy_test(cfg: &RunConfig) -> Result<NegativeEntropyReport> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let problem = cfg.problem(&grid)?;
    let (init, _) = make_initial_data(&grid, &cfg.problem)?;
    let p = cfg.problem.p;
    let terms = EntropyTerms::compute(&grid, p, &init.values);
    let e0 = entropy(&grid, p, &init.values);

    let mut report = NegativeEntropyReport {
        config: cfg.clone(),
        entropy_initial: e0,
        terms,
        applicable: false,
        note: String::new(),
        outcome: None,
        s_at_threshold: None,
        pass: false,
    };
    if !terms.sign_resolved() {
        report.note = format!("E(u0) = {e0:.6e} is within quadrature tolerance of zero; sign recorded, no outcome asserted");
        report.pass = true;
        return Ok(report);
    }
    if e0 >= 0.0 {
        report.note = format!("E(u0) = {e0:.6e} >= 0: the negative-entropy criterion does not apply");
        report.pass = true;
        return Ok(report);
    }

    let trajectory = evolve(&problem, &init, Frame::V, &cfg.controls())?;
    report.applicable = true;
    report.pass = matches!(trajectory.outcome.status, RunStatus::BlewUp { .. });
    if report.pass {
        report.s_at_threshold = Some(trajectory.final_state.clock);
        report.note = format!("E(u0) = {e0:.6e} < 0 and the run blew up");
    } else {
        report.note = format!("E(u0) = {e0:.6e} < 0 but the run did not blow up: {}", trajectory.outcome.reason);
    }
    report.outcome = Some(trajectory.outcome);
    Ok(report)
}
