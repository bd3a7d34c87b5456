//! Change of variables between the original and rescaled frames:
//! `v(y, s) = (t+1)^{1/(p-1)} u(sqrt(t+1) y, t)` with `t = e^s - 1`.

use crate::error::{Error, Result};
use crate::grid::{Field, Frame, RadialGrid};
use crate::interp::MonotoneCubic;

/// Relative tolerance when matching `t` against `e^s - 1`.
pub const CLOCK_TOLERANCE: f64 = 1e-9;

pub fn s_of_t(t: f64) -> f64 {
    t.ln_1p()
}

pub fn t_of_s(s: f64) -> f64 {
    s.exp_m1()
}

fn clocks_agree(t: f64, s: f64) -> bool {
    (t_of_s(s) - t).abs() <= CLOCK_TOLERANCE * (1.0 + t.abs())
}

/// Resamples `source` at `stretch * r_i`, multiplied by `scale`; zero past `r_max`.
fn resample(grid: &RadialGrid, source: &[f64], stretch: f64, scale: f64) -> Vec<f64> {
    let cubic = MonotoneCubic::new(source, grid.dr);
    let mut out: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&r| cubic.eval(stretch * r).map_or(0.0, |v| scale * v))
        .collect();
    out[grid.m] = 0.0;
    out
}

pub fn map_u_to_v(grid: &RadialGrid, p: f64, u: &Field) -> Result<Field> {
    if u.frame != Frame::U {
        return Err(Error::Map("map_u_to_v needs a U-frame field".into()));
    }
    let t = u.clock;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Map(format!("invalid original time t = {t}")));
    }
    let values = resample(grid, &u.values, (1.0 + t).sqrt(), (1.0 + t).powf(1.0 / (p - 1.0)));
    Ok(Field::new(values, Frame::V, s_of_t(t)))
}

pub fn map_v_to_u(grid: &RadialGrid, p: f64, v: &Field) -> Result<Field> {
    if v.frame != Frame::V {
        return Err(Error::Map("map_v_to_u needs a V-frame field".into()));
    }
    let s = v.clock;
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Map(format!("invalid rescaled time s = {s}")));
    }
    let t = t_of_s(s);
    let values = resample(grid, &v.values, 1.0 / (1.0 + t).sqrt(), (1.0 + t).powf(-1.0 / (p - 1.0)));
    Ok(Field::new(values, Frame::U, t))
}

/// [`map_u_to_v`], rejecting the call unless `u.clock = e^s - 1`.
pub fn map_u_to_v_at(grid: &RadialGrid, p: f64, u: &Field, s: f64) -> Result<Field> {
    if !clocks_agree(u.clock, s) {
        return Err(Error::Map(format!("clock mismatch: t = {} but e^s - 1 = {}", u.clock, t_of_s(s))));
    }
    map_u_to_v(grid, p, u)
}

/// [`map_v_to_u`], rejecting the call unless `t = e^{v.clock} - 1`.
pub fn map_v_to_u_at(grid: &RadialGrid, p: f64, v: &Field, t: f64) -> Result<Field> {
    if !clocks_agree(t, v.clock) {
        return Err(Error::Map(format!("clock mismatch: t = {t} but e^s - 1 = {}", t_of_s(v.clock))));
    }
    map_v_to_u(grid, p, v)
}
