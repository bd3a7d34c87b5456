//! Reference integrator for the rescaled equation, written without the
//! library's stencils: conservative flux Laplacian, explicit RK4.

#![allow(dead_code)]

use std::f64::consts::PI;

pub const ORACLE_INTERVALS: usize = 256;
pub const ORACLE_DT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOutcome {
    Decayed,
    /// Original time at which `sup v` first exceeded the threshold.
    BlewUp { t: f64 },
    Undetermined,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub outcome: OracleOutcome,
    /// `(s, ||v||_rho)` every `record_every` of rescaled time.
    pub norms: Vec<(f64, f64)>,
}

/// Three-dimensional radial problem `v_s = Δv + (r/2) v_r + v/(p-1) + v^p`
/// on `[0, r_max]` with `v(r_max) = 0`.
pub struct Oracle {
    pub p: f64,
    pub r_max: f64,
    h: f64,
    r: Vec<f64>,
}

impl Oracle {
    pub fn new(p: f64, r_max: f64) -> Self {
        let h = r_max / ORACLE_INTERVALS as f64;
        let r = (0..=ORACLE_INTERVALS).map(|i| i as f64 * h).collect();
        Oracle { p, r_max, h, r }
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut v: Vec<f64> = self.r.iter().map(|&r| f(r)).collect();
        v[ORACLE_INTERVALS] = 0.0;
        v
    }

    fn rhs(&self, v: &[f64], out: &mut [f64]) {
        let (h, m) = (self.h, ORACLE_INTERVALS);
        let beta = 1.0 / (self.p - 1.0);
        // Flux balance over the ball of radius h/2 around the origin.
        out[0] = 6.0 * (v[1] - v[0]) / (h * h) + beta * v[0] + v[0].max(0.0).powf(self.p);
        for i in 1..m {
            let (rl, rc, rr) = (self.r[i] - 0.5 * h, self.r[i], self.r[i] + 0.5 * h);
            let lap = (rr * rr * (v[i + 1] - v[i]) - rl * rl * (v[i] - v[i - 1])) / (rc * rc * h * h);
            let drift = 0.5 * rc * (v[i + 1] - v[i - 1]) / (2.0 * h);
            out[i] = lap + drift + beta * v[i] + v[i].max(0.0).powf(self.p);
        }
        out[m] = 0.0;
    }

    /// Trapezoidal `(int v^2 e^{r^2/4} 4 pi r^2 dr)^{1/2}`.
    pub fn weighted_norm(&self, v: &[f64]) -> f64 {
        let m = ORACLE_INTERVALS;
        let sum: f64 = (0..=m)
            .map(|i| {
                let end = if i == 0 || i == m { 0.5 } else { 1.0 };
                let r = self.r[i];
                end * v[i] * v[i] * (0.25 * r * r).exp() * 4.0 * PI * r * r
            })
            .sum();
        (sum * self.h).sqrt()
    }

    /// Integrates to `s_max`. The step shrinks as `sup v` grows so the power
    /// term stays resolved; blow-up is declared once `sup v >= threshold`.
    pub fn run(&self, mut v: Vec<f64>, s_max: f64, threshold: f64, decay: f64, record_every: f64) -> OracleRun {
        let n = v.len();
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut s = 0.0;
        let mut norms = vec![(0.0, self.weighted_norm(&v))];
        let mut next_record = record_every;
        while s < s_max {
            let sup = v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if !sup.is_finite() || sup >= threshold {
                return OracleRun { outcome: OracleOutcome::BlewUp { t: s.exp_m1() }, norms };
            }
            let stiff = self.p * sup.powf(self.p - 1.0);
            let dt = ORACLE_DT.min(0.01 / stiff).min(s_max - s).min(next_record - s);
            self.rhs(&v, &mut k1);
            axpy(&v, &k1, 0.5 * dt, &mut tmp);
            self.rhs(&tmp, &mut k2);
            axpy(&v, &k2, 0.5 * dt, &mut tmp);
            self.rhs(&tmp, &mut k3);
            axpy(&v, &k3, dt, &mut tmp);
            self.rhs(&tmp, &mut k4);
            for i in 0..n {
                v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            s += dt;
            if s >= next_record - 1e-12 {
                norms.push((s, self.weighted_norm(&v)));
                next_record += record_every;
            }
        }
        let last = self.weighted_norm(&v);
        let outcome = if last < decay { OracleOutcome::Decayed } else { OracleOutcome::Undetermined };
        OracleRun { outcome, norms }
    }
}

fn axpy(x: &[f64], y: &[f64], a: f64, out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(x).zip(y) {
        *o = x + a * y;
    }
}

/// Least-squares slope of `ln y` against `x` over `lo <= x <= hi`.
pub fn log_slope(points: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, _)| (lo..=hi).contains(x)).map(|&(x, y)| (x, y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
