//! Entropy-method functionals evaluated on a rescaled field, plus rate fits
//! and the balance checks run on completed trajectories.
//!
//! Every functional substitutes the spatial right-hand side for `v_s`, so
//! the reported values do not depend on the time step.

use serde::Serialize;

use crate::constants::{wang_envelope_v, DerivedConstants, ProblemParams};
use crate::dynamics::frames::{map_u_to_v, t_of_s};
use crate::dynamics::initial::barrier_ratio;
use crate::dynamics::stepping::{power_term, Stepper};
use crate::error::{Error, Result};
use crate::grid::{Field, Frame, RadialGrid};

/// `E(v) = int [ |v_r|^2/2 - v^2/(2(p-1)) - v^{p+1}/(p+1) ] rho dy`.
pub fn entropy(grid: &RadialGrid, p: f64, v: &[f64]) -> f64 {
    let dv = grid.radial_derivative(v);
    let density: Vec<f64> = v
        .iter()
        .zip(&dv)
        .map(|(&x, &d)| 0.5 * d * d - x * x / (2.0 * (p - 1.0)) - power_term(x, p + 1.0) / (p + 1.0))
        .collect();
    grid.weighted_integral(&density)
}

/// `I(v) = ||v_s||^2` in the weighted space.
pub fn production(grid: &RadialGrid, p: f64, v: &[f64]) -> f64 {
    let vs = Stepper::new(grid, Frame::V, p).rhs(v);
    grid.weighted_inner(&vs, &vs)
}

fn k_from(grid: &RadialGrid, p: f64, v: &[f64], vs: &[f64]) -> f64 {
    let density: Vec<f64> = v.iter().zip(vs).map(|(&x, &d)| power_term(x, p - 1.0) * d * d).collect();
    2.0 * p * grid.weighted_integral(&density)
}

fn r_from(grid: &RadialGrid, vs: &[f64], k: f64) -> f64 {
    let lvs = grid.apply_l(vs);
    grid.weighted_inner(&lvs, vs) - 0.5 * f64::from(grid.dim) * grid.weighted_inner(vs, vs) - 0.5 * k
}

/// `K = 2p int v^{p-1} v_s^2 rho dy`.
pub fn k_functional(grid: &RadialGrid, p: f64, v: &[f64]) -> f64 {
    let vs = Stepper::new(grid, Frame::V, p).rhs(v);
    k_from(grid, p, v, &vs)
}

/// `R = (L v_s, v_s) - (N/2)||v_s||^2 - K/2`.
pub fn r_functional(grid: &RadialGrid, p: f64, v: &[f64]) -> f64 {
    let vs = Stepper::new(grid, Frame::V, p).rhs(v);
    let k = k_from(grid, p, v, &vs);
    r_from(grid, &vs, k)
}

/// `g = ||v||^2 / 2`.
pub fn g_functional(grid: &RadialGrid, v: &[f64]) -> f64 {
    0.5 * grid.weighted_inner(v, v)
}

/// `I/2 + (p+1)E - ((p-1)N/2 - 2) g`; nonnegative when the norm bound holds.
pub fn gbound_margin(e: f64, i: f64, g: f64, constants: &DerivedConstants) -> Result<f64> {
    constants.require_norm_bound_exponent()?;
    Ok(0.5 * i + (constants.p + 1.0) * e - constants.gbound_coefficient() * g)
}

/// The functionals sharing one evaluation of `v_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functionals {
    pub entropy: f64,
    pub production: f64,
    pub k: f64,
    pub r: f64,
    pub g: f64,
    pub dirichlet: f64,
    /// `int v^{p+1} rho / int v^2 rho`.
    pub power_ratio: f64,
}

pub fn functionals(grid: &RadialGrid, stepper: &Stepper, v: &[f64]) -> Functionals {
    let p = stepper.p;
    let vs = stepper.rhs(v);
    let k = k_from(grid, p, v, &vs);
    let norm2 = grid.weighted_inner(v, v);
    let power: Vec<f64> = v.iter().map(|&x| power_term(x, p + 1.0)).collect();
    Functionals {
        entropy: entropy(grid, p, v),
        production: grid.weighted_inner(&vs, &vs),
        k,
        r: r_from(grid, &vs, k),
        g: 0.5 * norm2,
        dirichlet: grid.dirichlet(v),
        power_ratio: if norm2 > 0.0 { grid.weighted_integral(&power) / norm2 } else { 0.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSample {
    pub s: f64,
    pub t: f64,
    #[serde(flatten)]
    pub functionals: Functionals,
    pub norm_l2rho_v: f64,
    pub norm_l2_u: f64,
    pub norm_l4_u: f64,
    /// `(q, ||u||_{L^q})` for the configured exponents.
    pub norm_lq_u: Vec<(f64, f64)>,
    pub sup_v: f64,
    /// `wang_envelope_v(s) - sup v`; undefined at `s = 0`.
    pub wang_margin: Option<f64>,
    /// Margin of the weighted-norm bound; only where `p > p_tilde`.
    pub gbound_margin: Option<f64>,
    /// `max_r v / (lambda u_inf)`; equals the same ratio for u because
    /// `lambda u_inf` is invariant under the change of variables.
    pub barrier_ratio: Option<f64>,
}

/// Everything a run needs besides its state: grid, parameters, constants
/// and the rescaled-frame operator used for `v_s`.
#[derive(Debug, Clone)]
pub struct Problem<'g> {
    pub grid: &'g RadialGrid,
    pub params: ProblemParams,
    pub constants: DerivedConstants,
    pub q_list: Vec<f64>,
    v_stepper: Stepper,
}

impl<'g> Problem<'g> {
    pub fn new(grid: &'g RadialGrid, params: ProblemParams, q_list: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if params.dim != grid.dim {
            return Err(Error::InvalidParams(format!("grid dimension {} != problem dimension {}", grid.dim, params.dim)));
        }
        if let Some(q) = q_list.iter().find(|q| !(**q >= 1.0)) {
            return Err(Error::InvalidParams(format!("L^q exponents must be >= 1, got {q}")));
        }
        let constants = params.constants()?;
        let v_stepper = Stepper::new(grid, Frame::V, params.p);
        Ok(Problem { grid, params, constants, q_list, v_stepper })
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn v_stepper(&self) -> &Stepper {
        &self.v_stepper
    }

    /// `||u(t)||_{L^q} = (t+1)^{N/(2q) - 1/(p-1)} ||v(s)||_{L^q}`.
    fn u_norm_from_v(&self, v: &[f64], t: f64, q: f64) -> f64 {
        let n = f64::from(self.grid.dim);
        let expo = if q.is_infinite() { 0.0 } else { n / (2.0 * q) } - 1.0 / (self.p() - 1.0);
        (1.0 + t).powf(expo) * self.grid.lq_norm(v, q)
    }

    /// Diagnostics of a field in either frame. U-frame fields are mapped
    /// to the rescaled frame first; their u-norms are taken directly.
    pub fn sample(&self, field: &Field) -> Result<DiagnosticsSample> {
        match field.frame {
            Frame::V => {
                let s = field.clock;
                let t = t_of_s(s);
                let v = &field.values;
                let norms: Vec<(f64, f64)> = self.q_list.iter().map(|&q| (q, self.u_norm_from_v(v, t, q))).collect();
                Ok(self.assemble(v, s, t, norms, self.u_norm_from_v(v, t, 2.0), self.u_norm_from_v(v, t, 4.0)))
            }
            Frame::U => {
                let v = map_u_to_v(self.grid, self.p(), field)?;
                let u = &field.values;
                let norms: Vec<(f64, f64)> = self.q_list.iter().map(|&q| (q, self.grid.lq_norm(u, q))).collect();
                let (l2, l4) = (self.grid.lq_norm(u, 2.0), self.grid.lq_norm(u, 4.0));
                Ok(self.assemble(&v.values, v.clock, field.clock, norms, l2, l4))
            }
        }
    }

    fn assemble(&self, v: &[f64], s: f64, t: f64, norms: Vec<(f64, f64)>, l2: f64, l4: f64) -> DiagnosticsSample {
        let f = functionals(self.grid, &self.v_stepper, v);
        let sup_v = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let c = &self.constants;
        DiagnosticsSample {
            s,
            t,
            functionals: f,
            norm_l2rho_v: (2.0 * f.g).sqrt(),
            norm_l2_u: l2,
            norm_l4_u: l4,
            norm_lq_u: norms,
            sup_v,
            wang_margin: wang_envelope_v(s, c.p, c.lambda).ok().map(|env| env - sup_v),
            gbound_margin: gbound_margin(f.entropy, f.production, f.g, c).ok(),
            barrier_ratio: c
                .require_equilibrium()
                .ok()
                .map(|cn| barrier_ratio(self.grid, v, cn, c.p, c.lambda).0),
        }
    }
}

/// Abscissa for log-linear fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Abscissa {
    /// Rescaled time `s`: fits exponential decay.
    S,
    /// `ln(t+1)`: fits power laws in original time.
    LogOnePlusT,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub quantity: String,
    pub abscissa: Abscissa,
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// RMS residual of the fit in log space.
    pub residual: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 10;

/// Least-squares line through `(x, ln y)` for the points with `x` in `window`.
///
/// With [`Abscissa::LogOnePlusT`] the supplied `x` values are original times
/// and are transformed to `ln(1 + t)` before windowing.
pub fn fit_log_slope(series: &[(f64, f64)], window: (f64, f64), abscissa: Abscissa, quantity: &str) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::Fit(format!("{quantity}: empty window [{lo}, {hi}]")));
    }
    let points: Vec<(f64, f64)> = series
        .iter()
        .map(|&(x, y)| match abscissa {
            Abscissa::S => (x, y),
            Abscissa::LogOnePlusT => (x.ln_1p(), y),
        })
        .filter(|&(x, _)| x >= lo - 1e-12 && x <= hi + 1e-12)
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{quantity}: {} samples in [{lo}, {hi}], need {MIN_FIT_POINTS}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(Error::Fit(format!("{quantity}: nonpositive value {y:e} at {x}; the quantity crossed zero")));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points.iter().map(|p| (p.1.ln() - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit {
        quantity: quantity.to_string(),
        abscissa,
        slope,
        intercept,
        window,
        residual,
        points: points.len(),
    })
}

/// Three-point derivative at the middle of nonuniformly spaced samples.
fn centered_derivative(x: [f64; 3], y: [f64; 3]) -> f64 {
    let h1 = x[1] - x[0];
    let h2 = x[2] - x[1];
    -h2 / (h1 * (h1 + h2)) * y[0] + (h2 - h1) / (h1 * h2) * y[1] + h1 / (h2 * (h1 + h2)) * y[2]
}

/// Centered-difference residual of a balance law `d/ds q = rate(sample)` on
/// the interior samples with `s` in `window`, normalised by `scale(sample)`.
fn balance(
    samples: &[DiagnosticsSample],
    window: (f64, f64),
    quantity: impl Fn(&DiagnosticsSample) -> f64,
    rate: impl Fn(&DiagnosticsSample) -> f64,
    scale: impl Fn(&DiagnosticsSample) -> f64,
) -> Vec<(f64, f64)> {
    samples
        .windows(3)
        .filter(|w| w[1].s >= window.0 && w[1].s <= window.1)
        .map(|w| {
            let d = centered_derivative([w[0].s, w[1].s, w[2].s], [quantity(&w[0]), quantity(&w[1]), quantity(&w[2])]);
            (w[1].s, (d - rate(&w[1])).abs() / scale(&w[1]))
        })
        .collect()
}

/// `|dE/ds + I| / max(I, 1e-12)` along the samples.
pub fn entropy_balance(samples: &[DiagnosticsSample], window: (f64, f64)) -> Vec<(f64, f64)> {
    balance(
        samples,
        window,
        |x| x.functionals.entropy,
        |x| -x.functionals.production,
        |x| x.functionals.production.max(1e-12),
    )
}

/// `|dI/ds + 2 gamma I + 2R| / max(I, 1e-10)` along the samples.
pub fn production_balance(samples: &[DiagnosticsSample], window: (f64, f64), gamma: f64) -> Vec<(f64, f64)> {
    balance(
        samples,
        window,
        |x| x.functionals.production,
        |x| -2.0 * gamma * x.functionals.production - 2.0 * x.functionals.r,
        |x| x.functionals.production.max(1e-10),
    )
}

/// Largest relative increase of `K(s) e^{rate s}` between consecutive samples
/// with `s >= s_from`. Non-positive means the sequence never increased.
pub fn k_weighted_growth(samples: &[DiagnosticsSample], rate: f64, s_from: f64) -> f64 {
    let weighted: Vec<f64> = samples
        .iter()
        .filter(|x| x.s >= s_from)
        .map(|x| x.functionals.k * (rate * x.s).exp())
        .collect();
    weighted
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0] - 1.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Trapezoid estimate of `int_0^{upto} e^{2 gamma s} K(s) ds`.
pub fn weighted_k_integral(samples: &[DiagnosticsSample], gamma: f64, upto: f64) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|x| x.s <= upto + 1e-12)
        .map(|x| (x.s, (2.0 * gamma * x.s).exp() * x.functionals.k))
        .collect();
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}
