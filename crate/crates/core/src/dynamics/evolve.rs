//! Time integration with sampling, step control and blow-up detection.

use serde::Serialize;

use crate::diagnostics::{DiagnosticsSample, Problem};
use crate::dynamics::frames::{map_u_to_v, map_v_to_u, t_of_s};
use crate::dynamics::initial::{make_initial_data, WangReport};
use crate::dynamics::stepping::Stepper;
use crate::error::{Error, Result};
use crate::grid::{Field, Frame};

/// Relative change of the sup-norm in one step that triggers dt halving.
pub const MAX_RELATIVE_CHANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControls {
    /// Step in the run's own clock.
    pub dt: f64,
    /// `s_max` for rescaled runs, `t_max` for original-frame runs.
    pub horizon: f64,
    pub sample_every: usize,
    pub blowup_threshold: f64,
    pub dt_min: f64,
    /// Final `||v||_rho` below which the run counts as decayed.
    pub decay_threshold: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            dt: 1e-3,
            horizon: 8.0,
            sample_every: 100,
            blowup_threshold: 1e6,
            dt_min: 1e-40,
            decay_threshold: 1e-3,
        }
    }
}

impl StepControls {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt) {
            return bad(format!("need 0 < dt_min <= dt, got dt_min = {}", self.dt_min));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be positive and finite, got {}", self.horizon));
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1".into());
        }
        if !(self.blowup_threshold >= 1e3) {
            return bad(format!("blowup_threshold must be >= 1e3, got {}", self.blowup_threshold));
        }
        if !(self.decay_threshold > 0.0) {
            return bad(format!("decay_threshold must be positive, got {}", self.decay_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Decayed,
    /// `t_blowup` is an estimate in original time, not a measured value.
    BlewUp { t_blowup: f64 },
    Undetermined,
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Decayed => "decayed",
            RunStatus::BlewUp { .. } => "blew_up",
            RunStatus::Undetermined => "undetermined",
        }
    }

    pub fn t_blowup(&self) -> Option<f64> {
        match self {
            RunStatus::BlewUp { t_blowup } => Some(*t_blowup),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    #[serde(flatten)]
    pub status: RunStatus,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub frame: Frame,
    pub controls: StepControls,
    /// Diagnostics of the initial state; not part of `samples`.
    pub initial: DiagnosticsSample,
    pub samples: Vec<DiagnosticsSample>,
    pub outcome: RunOutcome,
    pub steps: usize,
    pub dt_final: f64,
    pub dt_halvings: u32,
    /// Largest negative excursion clipped by the positivity monitor, relative to sup.
    pub max_clip_depth: f64,
    #[serde(skip)]
    pub final_state: Field,
}

impl Trajectory {
    /// Initial sample followed by the recorded samples.
    pub fn all_samples(&self) -> impl Iterator<Item = &DiagnosticsSample> {
        std::iter::once(&self.initial).chain(&self.samples)
    }

    pub fn series(&self, f: impl Fn(&DiagnosticsSample) -> f64) -> Vec<(f64, f64)> {
        self.all_samples().map(|x| (x.s, f(x))).collect()
    }
}

fn original_time(frame: Frame, clock: f64) -> f64 {
    match frame {
        Frame::U => clock,
        Frame::V => t_of_s(clock),
    }
}

/// `(t, sup u)` of a state.
fn sup_u(field: &Field, p: f64) -> (f64, f64) {
    let t = original_time(field.frame, field.clock);
    match field.frame {
        Frame::U => (t, field.sup()),
        Frame::V => (t, (1.0 + t).powf(-1.0 / (p - 1.0)) * field.sup()),
    }
}

/// Extrapolates `m^{1-p}` linearly to zero from two sup-norm values of
/// `m' = m^p` taken `gap` apart in original time; `last.0` is the later time.
pub fn estimate_blowup_time(prev: (f64, f64), last: (f64, f64), gap: f64, p: f64) -> f64 {
    let y1 = prev.1.powf(1.0 - p);
    let y2 = last.1.powf(1.0 - p);
    if gap > 0.0 && y1 > y2 && y2.is_finite() {
        last.0 + y2 * gap / (y1 - y2)
    } else {
        last.0 + y2 / (p - 1.0)
    }
}

/// Integrates `init` in `frame` until the horizon, blow-up or step-control failure.
///
/// `init` may be given in either frame; it is mapped to `frame` at the matching clock.
pub fn evolve(problem: &Problem, init: &Field, frame: Frame, controls: &StepControls) -> Result<Trajectory> {
    controls.validate()?;
    let grid = problem.grid;
    let p = problem.p();
    if init.values.len() != grid.len() {
        return Err(Error::InvalidParams(format!(
            "initial field has {} values, grid has {}",
            init.values.len(),
            grid.len()
        )));
    }
    let mut state = match (init.frame, frame) {
        (a, b) if a == b => init.clone(),
        _ if init.clock == 0.0 => Field::new(init.values.clone(), frame, 0.0),
        (Frame::U, Frame::V) => map_u_to_v(grid, p, init)?,
        _ => map_v_to_u(grid, p, init)?,
    };
    if state.clock >= controls.horizon {
        return Err(Error::InvalidParams(format!(
            "initial clock {} is not before the horizon {}",
            state.clock, controls.horizon
        )));
    }

    let stepper = Stepper::new(grid, frame, p);
    let mut dt = controls.dt;
    stepper.check_dt(dt)?;

    let initial = problem.sample(&state)?;
    let mut samples = Vec::new();
    let mut steps = 0usize;
    let mut halvings = 0u32;
    let mut max_clip_depth = 0.0f64;
    let mut prev_sup = sup_u(&state, p);
    let mut sampled_last = true;

    // The clock is `seg_start + seg_steps * dt`; the operators are autonomous,
    // so steps far below the clock's resolution still advance the state.
    let mut seg_start = state.clock;
    let mut seg_steps = 0usize;
    let mut reached = false;

    let outcome = loop {
        if reached {
            if !sampled_last {
                samples.push(problem.sample(&state)?);
            }
            let norm = samples.last().unwrap_or(&initial).norm_l2rho_v;
            break if norm < controls.decay_threshold {
                RunOutcome {
                    status: RunStatus::Decayed,
                    reason: format!("||v||_rho = {norm:.3e} < {:e} at the horizon", controls.decay_threshold),
                }
            } else {
                RunOutcome {
                    status: RunStatus::Undetermined,
                    reason: format!("horizon reached with ||v||_rho = {norm:.3e}"),
                }
            };
        }

        let elapsed = seg_steps as f64 * dt;
        let left = controls.horizon - seg_start - elapsed;
        let last = left <= dt * (1.0 + 1e-9);
        let h = if last { left } else { dt };
        let next_clock = if last { controls.horizon } else { seg_start + elapsed + dt };

        let raw = stepper.step_values(&state.values, h)?;
        if raw.iter().any(|v| !v.is_finite()) {
            break RunOutcome {
                status: RunStatus::BlewUp { t_blowup: original_time(frame, next_clock) },
                reason: format!("nonfinite values at {} = {next_clock}", frame.clock_name()),
            };
        }

        let old_sup = state.sup();
        let new_sup = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if old_sup > 0.0 && (new_sup - old_sup).abs() > MAX_RELATIVE_CHANGE * old_sup {
            if 0.5 * dt < controls.dt_min {
                break RunOutcome {
                    status: RunStatus::Undetermined,
                    reason: format!("step control exhausted at dt = {dt:e} ({} = {})", frame.clock_name(), state.clock),
                };
            }
            dt *= 0.5;
            halvings += 1;
            seg_start += elapsed;
            seg_steps = 0;
            continue;
        }

        let (next, depth) = stepper.step(&state, h)?;
        state = Field::new(next.values, frame, next_clock);
        max_clip_depth = max_clip_depth.max(depth);
        steps += 1;
        seg_steps += 1;
        sampled_last = false;
        reached = last;

        // Original-time increment of this step, exact even below the clock's resolution.
        let dt_orig = match frame {
            Frame::U => h,
            Frame::V => (1.0 + t_of_s(next_clock - h)) * h.exp_m1(),
        };
        let cur_sup = sup_u(&state, p);
        if state.sup() >= controls.blowup_threshold {
            if state.is_finite() {
                samples.push(problem.sample(&state)?);
            }
            let t_b = estimate_blowup_time(prev_sup, cur_sup, dt_orig, p);
            break RunOutcome {
                status: RunStatus::BlewUp { t_blowup: t_b },
                reason: format!(
                    "sup = {:.3e} >= {:e} at {} = {}",
                    state.sup(),
                    controls.blowup_threshold,
                    frame.clock_name(),
                    state.clock
                ),
            };
        }
        prev_sup = cur_sup;

        if steps % controls.sample_every == 0 {
            samples.push(problem.sample(&state)?);
            sampled_last = true;
        }
    };

    Ok(Trajectory {
        frame,
        controls: *controls,
        initial,
        samples,
        outcome,
        steps,
        dt_final: dt,
        dt_halvings: halvings,
        max_clip_depth,
        final_state: state,
    })
}

/// Builds the initial data from the problem's parameters and evolves it.
pub fn run(problem: &Problem, frame: Frame, controls: &StepControls) -> Result<(Trajectory, Option<WangReport>)> {
    let (init, report) = make_initial_data(problem.grid, &problem.params)?;
    let trajectory = evolve(problem, &init, frame, controls)?;
    Ok((trajectory, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ProblemParams;
    use crate::dynamics::InitialDataSpec;
    use crate::grid::RadialGrid;

    fn problem(grid: &RadialGrid, p: f64, init: InitialDataSpec) -> Problem<'_> {
        Problem::new(grid, ProblemParams::new(grid.dim, p, 0.5, init).unwrap(), vec![2.0, 4.0]).unwrap()
    }

    #[test]
    fn controls_validation() {
        assert!(StepControls::default().validate().is_ok());
        let c = StepControls { blowup_threshold: 10.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = StepControls { dt_min: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = StepControls { sample_every: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn blowup_estimate_is_exact_for_the_ode() {
        // m(t) = ((p-1)(T - t))^{-1/(p-1)}
        let (p, big_t) = (5.0, 0.7);
        let m = |t: f64| ((p - 1.0) * (big_t - t)).powf(-1.0 / (p - 1.0));
        let est = estimate_blowup_time((0.3, m(0.3)), (0.5, m(0.5)), 0.2, p);
        assert!((est - big_t).abs() < 1e-12);
        let fallback = estimate_blowup_time((0.5, m(0.5)), (0.5, m(0.5)), 0.0, p);
        assert!((fallback - big_t).abs() < 1e-12);
    }

    #[test]
    fn sampling_cadence_and_clock() {
        let g = RadialGrid::new(3, 128, 16.0).unwrap();
        let pr = problem(&g, 5.0, InitialDataSpec::gaussian(0.1, 2.0));
        let c = StepControls { dt: 0.01, horizon: 1.0, sample_every: 7, ..Default::default() };
        let (tr, _) = run(&pr, Frame::V, &c).unwrap();
        assert_eq!(tr.steps, 100);
        // 14 regular samples plus one at the horizon.
        assert_eq!(tr.samples.len(), 15);
        assert_eq!(tr.samples.last().unwrap().s, 1.0);
        assert!((tr.samples[0].s - 0.07).abs() < 1e-15);
        assert_eq!(tr.initial.s, 0.0);
    }

    #[test]
    fn undetermined_when_norm_stays_large() {
        let g = RadialGrid::new(3, 128, 16.0).unwrap();
        let pr = problem(&g, 5.0, InitialDataSpec::gaussian(0.1, 2.0));
        let c = StepControls { dt: 0.01, horizon: 0.5, ..Default::default() };
        let (tr, _) = run(&pr, Frame::V, &c).unwrap();
        assert_eq!(tr.outcome.status, RunStatus::Undetermined);
    }

    #[test]
    fn deterministic() {
        let g = RadialGrid::new(3, 128, 16.0).unwrap();
        let pr = problem(&g, 5.0, InitialDataSpec::gaussian(1.5, 2.0));
        let c = StepControls { dt: 0.01, horizon: 2.0, sample_every: 10, ..Default::default() };
        let (a, _) = run(&pr, Frame::V, &c).unwrap();
        let (b, _) = run(&pr, Frame::V, &c).unwrap();
        assert_eq!(a.final_state.values, b.final_state.values);
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn large_data_blows_up_with_halving() {
        let g = RadialGrid::new(3, 256, 16.0).unwrap();
        let pr = problem(&g, 5.0, InitialDataSpec::gaussian(3.0, 2.0));
        let c = StepControls { dt: 1e-3, horizon: 1.0, ..Default::default() };
        let (tr, _) = run(&pr, Frame::U, &c).unwrap();
        let t_b = tr.outcome.status.t_blowup().expect("blow-up");
        assert!(t_b > 0.0 && t_b < 1.0, "{t_b}");
        assert!(tr.dt_halvings > 0);
        assert!(tr.final_state.clock <= t_b);
    }

    #[test]
    fn horizon_before_start_rejected() {
        let g = RadialGrid::new(3, 64, 16.0).unwrap();
        let pr = problem(&g, 5.0, InitialDataSpec::gaussian(0.1, 2.0));
        let f = Field::zeros(&g, Frame::V, 2.0);
        let c = StepControls { horizon: 1.0, ..Default::default() };
        assert!(evolve(&pr, &f, Frame::V, &c).is_err());
    }
}
