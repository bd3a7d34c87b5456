//! Spatial right-hand sides and the implicit-explicit step.
//!
//! The linear part (diffusion, drift and the `v/(p-1)` growth in the
//! rescaled frame) is a tridiagonal operator stepped with backward Euler;
//! the power nonlinearity is taken explicitly at the old state.

use crate::error::{Error, Result};
use crate::grid::{Field, Frame, RadialGrid};

/// Roundoff tolerated below zero before a solution field is rejected.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

/// Tridiagonal linear operator; the last row (Dirichlet node) is zero.
#[derive(Debug, Clone)]
pub struct LinearPart {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearPart {
    /// `Δ` in the original frame, `Δ + (r/2)∂_r + 1/(p-1)` in the rescaled frame.
    pub fn new(grid: &RadialGrid, frame: Frame, p: f64) -> Self {
        let n = grid.len();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..grid.m {
            let (lo, di, up) = grid.laplacian_row(i);
            lower[i] = lo;
            diag[i] = di;
            upper[i] = up;
            if frame == Frame::V {
                diag[i] += 1.0 / (p - 1.0);
                if i > 0 {
                    let drift = 0.5 * grid.nodes[i] / (2.0 * grid.dr);
                    lower[i] -= drift;
                    upper[i] += drift;
                }
            }
        }
        LinearPart { lower, diag, upper }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.lower[i] * f[i - 1] } else { 0.0 };
                let right = if i + 1 < n { self.upper[i] * f[i + 1] } else { 0.0 };
                left + self.diag[i] * f[i] + right
            })
            .collect()
    }

    /// Largest `dt` for which `I - dt A` stays strictly diagonally dominant.
    pub fn max_stable_dt(&self) -> f64 {
        self.diag
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&d, (&lo, &up))| {
                let excess = d + lo.abs() + up.abs();
                if excess > 1e-9 * d.abs().max(1.0) {
                    1.0 / excess
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `(I - dt A) x = b` by the Thomas algorithm.
    pub fn solve_implicit(&self, dt: f64, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        let sub = |i: usize| -dt * self.lower[i];
        let sup = |i: usize| -dt * self.upper[i];
        let dia = |i: usize| 1.0 - dt * self.diag[i];

        let mut denom = dia(0);
        if denom == 0.0 {
            return Err(Error::Step("singular tridiagonal system".into()));
        }
        c_prime[0] = sup(0) / denom;
        d_prime[0] = b[0] / denom;
        for i in 1..n {
            denom = dia(i) - sub(i) * c_prime[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::Step(format!("tridiagonal elimination failed at row {i}")));
            }
            c_prime[i] = if i + 1 < n { sup(i) / denom } else { 0.0 };
            d_prime[i] = (b[i] - sub(i) * d_prime[i - 1]) / denom;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d_prime[i] - c_prime[i] * x[i + 1];
        }
        Ok(x)
    }
}

/// Right-hand side and step for one frame of the equation.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub frame: Frame,
    pub p: f64,
    /// Drop the power term; used to isolate the linear dynamics.
    pub nonlinear: bool,
    linear: LinearPart,
    max_dt: f64,
}

/// `max(v, 0)^p`; roundoff negatives have no fractional power.
pub fn power_term(v: f64, p: f64) -> f64 {
    let v = v.max(0.0);
    if p.fract() == 0.0 && p.abs() < 64.0 {
        v.powi(p as i32)
    } else {
        v.powf(p)
    }
}

impl Stepper {
    pub fn new(grid: &RadialGrid, frame: Frame, p: f64) -> Self {
        let linear = LinearPart::new(grid, frame, p);
        let max_dt = linear.max_stable_dt();
        Stepper { frame, p, nonlinear: true, linear, max_dt }
    }

    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn max_stable_dt(&self) -> f64 {
        self.max_dt
    }

    /// Spatial right-hand side; zero at the Dirichlet node.
    pub fn rhs(&self, values: &[f64]) -> Vec<f64> {
        let mut out = self.linear.apply(values);
        if self.nonlinear {
            for (o, &v) in out.iter_mut().zip(values) {
                *o += power_term(v, self.p);
            }
        }
        let last = out.len() - 1;
        out[last] = 0.0;
        out
    }

    pub fn check_dt(&self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Step(format!("dt must be positive, got {dt}")));
        }
        if dt >= self.max_dt {
            return Err(Error::Step(format!(
                "dt = {dt} is not below the diagonal-dominance bound {:.6e}",
                self.max_dt
            )));
        }
        Ok(())
    }

    /// One step without the positivity monitor; returns the raw new values.
    pub fn step_values(&self, values: &[f64], dt: f64) -> Result<Vec<f64>> {
        self.check_dt(dt)?;
        let mut b: Vec<f64> = values
            .iter()
            .map(|&v| if self.nonlinear { v + dt * power_term(v, self.p) } else { v })
            .collect();
        let last = b.len() - 1;
        b[last] = 0.0;
        self.linear.solve_implicit(dt, &b)
    }

    /// One step of a solution field. Negative values within roundoff are
    /// clipped; returns the new field and the clipped depth relative to its sup.
    pub fn step(&self, state: &Field, dt: f64) -> Result<(Field, f64)> {
        if state.frame != self.frame {
            return Err(Error::Step(format!("stepper is for frame {:?}, field is {:?}", self.frame, state.frame)));
        }
        let mut values = self.step_values(&state.values, dt)?;
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let depth = if min < 0.0 && sup > 0.0 { -min / sup } else { 0.0 };
        if depth > NEGATIVITY_TOLERANCE {
            return Err(Error::Step(format!("solution went negative: min {min:e} against sup {sup:e}")));
        }
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok((Field::new(values, self.frame, state.clock + dt), depth))
    }
}

fn expect_frame(field: &Field, frame: Frame) -> Result<()> {
    if field.frame != frame {
        return Err(Error::Step(format!("expected a {:?}-frame field, got {:?}", frame, field.frame)));
    }
    Ok(())
}

/// `Δv + (r/2)v_r + v/(p-1) + v^p`.
pub fn rhs_v(grid: &RadialGrid, p: f64, v: &Field) -> Result<Vec<f64>> {
    expect_frame(v, Frame::V)?;
    Ok(Stepper::new(grid, Frame::V, p).rhs(&v.values))
}

/// `Δu + u^p`.
pub fn rhs_u(grid: &RadialGrid, p: f64, u: &Field) -> Result<Vec<f64>> {
    expect_frame(u, Frame::U)?;
    Ok(Stepper::new(grid, Frame::U, p).rhs(&u.values))
}

/// One backward-Euler/explicit-power step in the field's own frame.
pub fn step_imex(grid: &RadialGrid, p: f64, state: &Field, dt: f64) -> Result<Field> {
    Stepper::new(grid, state.frame, p).step(state, dt).map(|(f, _)| f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn phi1(r: f64) -> f64 {
        (-0.25 * r * r).exp()
    }

    #[test]
    fn zero_is_fixed() {
        let g = RadialGrid::new(3, 128, 16.0).unwrap();
        let z = Field::zeros(&g, Frame::V, 0.0);
        assert!(rhs_v(&g, 5.0, &z).unwrap().iter().all(|&v| v == 0.0));
        let next = step_imex(&g, 5.0, &z, 1e-3).unwrap();
        assert!(next.values.iter().all(|&v| v == 0.0));
        let zu = Field::zeros(&g, Frame::U, 0.0);
        assert!(rhs_u(&g, 5.0, &zu).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rhs_v_on_eigenfunction() {
        let g = RadialGrid::new(3, 2048, 16.0).unwrap();
        let v = Field::new(g.sample(phi1), Frame::V, 0.0);
        let rhs = rhs_v(&g, 5.0, &v).unwrap();
        // (-N/2 + 1/(p-1)) phi + phi^p, evaluated analytically at each node.
        let expect = g.sample(|r| -1.25 * phi1(r) + phi1(r).powi(5));
        assert_relative_eq!(rhs[0], -0.25, max_relative = 1e-3);
        for (i, (a, b)) in rhs.iter().zip(&expect).enumerate().take(g.m) {
            assert!((a - b).abs() < 1e-3, "node {i}: {a} vs {b}");
        }
    }

    #[test]
    fn rhs_u_on_constant_and_equilibrium() {
        let g = RadialGrid::new(3, 1024, 16.0).unwrap();
        let c = 0.3;
        let u = Field::new(vec![c; g.len()], Frame::U, 0.0);
        let rhs = rhs_u(&g, 5.0, &u).unwrap();
        for v in &rhs[..g.m - 1] {
            assert_relative_eq!(*v, c.powi(5), max_relative = 1e-9);
        }

        // Δu_inf + u_inf^p = 0 away from the singular node.
        let coeff = 0.25f64.powf(0.25);
        let mut vals = g.sample(|r| if r > 0.0 { coeff / r.sqrt() } else { 0.0 });
        vals[0] = vals[1];
        let u_inf = Field::new(vals, Frame::U, 0.0);
        let rhs = rhs_u(&g, 5.0, &u_inf).unwrap();
        for (i, &r) in g.nodes.iter().enumerate() {
            if r >= 1.0 && i < g.m - 1 {
                let scale = u_inf.values[i].powi(5);
                assert!(rhs[i].abs() <= 1e-2 * scale, "r = {r}: {}", rhs[i] / scale);
            }
        }
    }

    #[test]
    fn linear_part_is_linear() {
        let g = RadialGrid::new(3, 256, 16.0).unwrap();
        let s = Stepper::new(&g, Frame::V, 5.0).linear_only();
        let f = g.sample(|r| (1.0 + r.cos()) * (-r * r / 5.0).exp());
        let h = g.sample(|r| (r * 0.7).sin() * (-r * r / 6.0).exp());
        let (a, b) = (1.7, -0.45);
        let combo: Vec<f64> = f.iter().zip(&h).map(|(x, y)| a * x + b * y).collect();
        let lhs = s.rhs(&combo);
        let (rf, rh) = (s.rhs(&f), s.rhs(&h));
        for i in 0..g.len() {
            assert!((lhs[i] - (a * rf[i] + b * rh[i])).abs() <= 1e-9 * (1.0 + lhs[i].abs()));
        }
    }

    #[test]
    fn linear_step_on_eigenfunction_matches_scalar_backward_euler() {
        let g = RadialGrid::new(3, 1024, 16.0).unwrap();
        let s = Stepper::new(&g, Frame::V, 5.0).linear_only();
        let v = Field::new(g.sample(phi1), Frame::V, 0.0);
        let dt = 1e-3;
        let (next, _) = s.step(&v, dt).unwrap();
        let factor = 1.0 / (1.0 + 1.25 * dt);
        assert_relative_eq!(factor, 0.998751, max_relative = 1e-6);
        assert!((next.values[0] / v.values[0] - factor).abs() < 1e-4);
        let ratio = g.weighted_inner(&next.values, &v.values) / g.weighted_inner(&v.values, &v.values);
        assert!((ratio - factor).abs() < 1e-4);
    }

    #[test]
    fn first_order_in_time() {
        // Reference from a much finer step; errors should halve with dt.
        let g = RadialGrid::new(3, 256, 16.0).unwrap();
        let s = Stepper::new(&g, Frame::V, 5.0);
        let init = g.sample(|r| 0.8 * phi1(r));
        let run = |dt: f64, n: usize| {
            let mut v = init.clone();
            for _ in 0..n {
                v = s.step_values(&v, dt).unwrap();
            }
            v
        };
        let reference = run(1e-5, 10_000);
        let e1 = {
            let v = run(2e-3, 50);
            g.weighted_norm(&v.iter().zip(&reference).map(|(a, b)| a - b).collect::<Vec<_>>())
        };
        let e2 = {
            let v = run(1e-3, 100);
            g.weighted_norm(&v.iter().zip(&reference).map(|(a, b)| a - b).collect::<Vec<_>>())
        };
        let order = (e1 / e2).log2();
        assert!((order - 1.0).abs() < 0.15, "observed order {order}");
    }

    #[test]
    fn dt_bound_is_enforced() {
        let g = RadialGrid::new(3, 256, 16.0).unwrap();
        // Row 1 carries the drift on both sides: 1 > dt (1/(p-1) + 1/2).
        let s = Stepper::new(&g, Frame::V, 1.5);
        assert_relative_eq!(s.max_stable_dt(), 0.4, max_relative = 1e-6);
        assert!(s.check_dt(0.39).is_ok());
        assert!(s.check_dt(0.4).is_err());
        assert!(Stepper::new(&g, Frame::U, 1.5).max_stable_dt().is_infinite());
    }

    #[test]
    fn boundary_stays_zero() {
        let g = RadialGrid::new(3, 256, 16.0).unwrap();
        let mut v = Field::new(g.sample(|r| 0.5 * phi1(r)), Frame::V, 0.0);
        v.values[g.m] = 0.0;
        for _ in 0..10 {
            v = step_imex(&g, 5.0, &v, 1e-3).unwrap();
        }
        assert_eq!(v.values[g.m], 0.0);
        assert!(v.values.iter().all(|&x| x >= 0.0));
        assert_relative_eq!(v.clock, 1e-2, max_relative = 1e-12);
    }
}
