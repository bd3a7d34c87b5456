//! Uniform radial grid for radially symmetric fields on R^N.
//!
//! Nodes are `r_i = i * dr` for `i = 0..=M`. Integrals over R^N are
//! trapezoid sums against `omega_N r^{N-1} dr`, and the Gaussian weight
//! `rho = exp(r^2/4)` is cached per node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which equation a [`Field`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Original variables `(x, t)`.
    U,
    /// Self-similar variables `(y, s)`.
    V,
}

impl Frame {
    pub fn clock_name(self) -> &'static str {
        match self {
            Frame::U => "t",
            Frame::V => "s",
        }
    }
}

/// Radial profile of u or v at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub frame: Frame,
    /// `t` for [`Frame::U`], `s` for [`Frame::V`].
    pub clock: f64,
}

impl Field {
    pub fn new(values: Vec<f64>, frame: Frame, clock: f64) -> Self {
        Field { values, frame, clock }
    }

    pub fn zeros(grid: &RadialGrid, frame: Frame, clock: f64) -> Self {
        Field::new(vec![0.0; grid.len()], frame, clock)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Largest admissible truncation radius: `exp(r^2/4)` must stay finite.
pub fn max_radius() -> f64 {
    2.0 * f64::MAX.ln().sqrt()
}

/// Area of the unit sphere in R^N, `2 pi^{N/2} / Gamma(N/2)`.
pub fn sphere_area(dim: u32) -> f64 {
    use std::f64::consts::PI;
    // Gamma(N/2) by recurrence from Gamma(1/2) or Gamma(1).
    let mut gamma_half = if dim % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    let target = f64::from(dim) / 2.0;
    while x < target {
        gamma_half *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma_half
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub dim: u32,
    /// Number of intervals; there are `m + 1` nodes.
    pub m: usize,
    pub r_max: f64,
    pub dr: f64,
    pub nodes: Vec<f64>,
    pub vol_weights: Vec<f64>,
    pub rho: Vec<f64>,
    pub omega_n: f64,
}

impl RadialGrid {
    pub fn new(dim: u32, m: usize, r_max: f64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::Grid("dimension must be at least 1".into()));
        }
        // The one-sided boundary stencils reach four nodes in.
        if m < 4 {
            return Err(Error::Grid(format!("need at least 4 intervals, got {m}")));
        }
        if !(r_max > 0.0) {
            return Err(Error::Grid(format!("r_max must be positive, got {r_max}")));
        }
        if r_max >= max_radius() {
            return Err(Error::Grid(format!(
                "r_max = {r_max} overflows the weight exp(r^2/4); limit is {:.3}",
                max_radius()
            )));
        }
        let dr = r_max / m as f64;
        let omega_n = sphere_area(dim);
        let nodes: Vec<f64> = (0..=m).map(|i| if i == m { r_max } else { i as f64 * dr }).collect();
        let vol_weights = nodes
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let end = if i == 0 || i == m { 0.5 } else { 1.0 };
                end * omega_n * r.powi(dim as i32 - 1) * dr
            })
            .collect();
        let rho = nodes.iter().map(|&r| (0.25 * r * r).exp()).collect();
        Ok(RadialGrid { dim, m, r_max, dr, nodes, vol_weights, rho, omega_n })
    }

    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// `(f, g)` in L2 with weight rho.
    pub fn weighted_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        debug_assert_eq!(g.len(), self.len());
        f.iter()
            .zip(g)
            .zip(self.rho.iter().zip(&self.vol_weights))
            .map(|((a, b), (rho, w))| a * b * rho * w)
            .sum()
    }

    pub fn weighted_norm(&self, f: &[f64]) -> f64 {
        self.weighted_inner(f, f).sqrt()
    }

    /// Weighted integral `int h rho dy`.
    pub fn weighted_integral(&self, h: &[f64]) -> f64 {
        h.iter().zip(self.rho.iter().zip(&self.vol_weights)).map(|(h, (rho, w))| h * rho * w).sum()
    }

    /// Unweighted L^q norm; `q = inf` gives the max norm.
    pub fn lq_norm(&self, f: &[f64], q: f64) -> f64 {
        if q.is_infinite() {
            return f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
        let sum: f64 = f.iter().zip(&self.vol_weights).map(|(v, w)| v.abs().powf(q) * w).sum();
        sum.powf(1.0 / q)
    }

    /// Second-order central first derivative with `f_r(0) = 0` and a
    /// one-sided stencil at `r_max`.
    pub fn radial_derivative(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m;
        let h = self.dr;
        let mut out = vec![0.0; m + 1];
        for i in 1..m {
            out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        out[m] = (3.0 * f[m] - 4.0 * f[m - 1] + f[m - 2]) / (2.0 * h);
        out
    }

    /// Stencil `(lower, diag, upper)` of the radial Laplacian at node `i < m`.
    pub fn laplacian_row(&self, i: usize) -> (f64, f64, f64) {
        let h2 = self.dr * self.dr;
        let n = f64::from(self.dim);
        if i == 0 {
            return (0.0, -2.0 * n / h2, 2.0 * n / h2);
        }
        let c = (n - 1.0) / self.nodes[i] / (2.0 * self.dr);
        (1.0 / h2 - c, -2.0 / h2, 1.0 / h2 + c)
    }

    /// `f'' + (N-1)/r f'`, with `2N (f_1 - f_0)/dr^2` at the origin.
    pub fn radial_laplacian(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m;
        let h = self.dr;
        let mut out = vec![0.0; m + 1];
        for i in 0..m {
            let (lo, di, up) = self.laplacian_row(i);
            let left = if i == 0 { 0.0 } else { lo * f[i - 1] };
            out[i] = left + di * f[i] + up * f[i + 1];
        }
        let fpp = (2.0 * f[m] - 5.0 * f[m - 1] + 4.0 * f[m - 2] - f[m - 3]) / (h * h);
        let fp = (3.0 * f[m] - 4.0 * f[m - 1] + f[m - 2]) / (2.0 * h);
        out[m] = fpp + f64::from(self.dim - 1) / self.r_max * fp;
        out
    }

    /// `L f = -Δf - (r/2) f_r`.
    pub fn apply_l(&self, f: &[f64]) -> Vec<f64> {
        let lap = self.radial_laplacian(f);
        let der = self.radial_derivative(f);
        lap.iter()
            .zip(&der)
            .zip(&self.nodes)
            .map(|((l, d), r)| -l - 0.5 * r * d)
            .collect()
    }

    /// Weighted Dirichlet integral `int |f_r|^2 rho dy`.
    pub fn dirichlet(&self, f: &[f64]) -> f64 {
        let d = self.radial_derivative(f);
        self.weighted_inner(&d, &d)
    }

    /// Number of nodes making up the outer 5% of the grid.
    pub fn tail_nodes(&self) -> usize {
        (0.05 * self.len() as f64).ceil() as usize
    }

    /// Share of the weighted mass `f^2 rho` carried by the outer 5% of nodes.
    /// Zero for the zero field.
    pub fn tail_fraction(&self, f: &[f64]) -> f64 {
        let terms: Vec<f64> = f
            .iter()
            .zip(self.rho.iter().zip(&self.vol_weights))
            .map(|(v, (rho, w))| v * v * rho * w)
            .collect();
        let total: f64 = terms.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        let start = self.len() - self.tail_nodes();
        terms[start..].iter().sum::<f64>() / total
    }
}
