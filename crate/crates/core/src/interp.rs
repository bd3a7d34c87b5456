//! Monotone piecewise-cubic Hermite interpolation on a uniform radial grid.

/// Shape-preserving cubic through `(i * h, values[i])`.
///
/// Node slopes follow the Fritsch–Butland harmonic mean, so the interpolant
/// never overshoots the data. The slope at `r = 0` is zero (radial symmetry).
#[derive(Debug, Clone)]
pub struct MonotoneCubic<'a> {
    values: &'a [f64],
    slopes: Vec<f64>,
    h: f64,
}

impl<'a> MonotoneCubic<'a> {
    pub fn new(values: &'a [f64], h: f64) -> Self {
        let n = values.len();
        assert!(n >= 3, "need at least three nodes");
        let secant: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![0.0; n];
        for k in 1..n - 1 {
            let (a, b) = (secant[k - 1], secant[k]);
            if a * b > 0.0 {
                slopes[k] = 2.0 * a * b / (a + b);
            }
        }
        // Three-point end slope, clipped to preserve shape.
        let (a, b) = (secant[n - 2], secant[n - 3]);
        let mut end = 0.5 * (3.0 * a - b);
        if end * a <= 0.0 {
            end = 0.0;
        } else if a * b <= 0.0 && end.abs() > 3.0 * a.abs() {
            end = 3.0 * a;
        }
        slopes[n - 1] = end;
        MonotoneCubic { values, slopes, h }
    }

    /// Value at radius `r`; `None` outside `[0, (n-1) h]`.
    pub fn eval(&self, r: f64) -> Option<f64> {
        let n = self.values.len();
        let last = (n - 1) as f64 * self.h;
        if !(r >= 0.0) || r > last * (1.0 + 1e-14) {
            return None;
        }
        let x = (r / self.h).min((n - 1) as f64);
        let k = (x.floor() as usize).min(n - 2);
        let t = x - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.slopes[k] * self.h, self.slopes[k + 1] * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1)
    }
}
