use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{derive_constants, ProblemParams};
use crate::error::{Error, Result};
use crate::grid::{Field, Frame, RadialGrid};

/// Tail fraction above which the initial data is not treated as an
/// element of the weighted space.
pub const TAIL_REJECT: f64 = 1e-4;
pub const TAIL_WARN: f64 = 1e-8;

/// Radial initial profile `u0(r)`.
///
/// Written and parsed as `kind:a:b`, e.g. `gaussian:0.1:2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialDataSpec {
    /// `amplitude * exp(-r^2 / width^2)`.
    Gaussian { amplitude: f64, width: f64 },
    /// Smooth compactly supported bump of height `amplitude` on `r < radius`.
    Bump { amplitude: f64, radius: f64 },
    /// `fraction * lambda * u_inf`, flattened inside `cutoff` and damped by
    /// `exp(-(r^2 - cutoff^2)/4)` outside so it lies in the weighted space.
    ScaledSingular { fraction: f64, cutoff: f64 },
}

impl InitialDataSpec {
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        InitialDataSpec::Gaussian { amplitude, width }
    }

    pub fn validate(&self) -> Result<()> {
        let (name, a, b) = match *self {
            InitialDataSpec::Gaussian { amplitude, width } => ("gaussian", amplitude, width),
            InitialDataSpec::Bump { amplitude, radius } => ("bump", amplitude, radius),
            InitialDataSpec::ScaledSingular { fraction, cutoff } => ("singular", fraction, cutoff),
        };
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InitialData(format!("{name}: amplitude must be positive (trivial data), got {a}")));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InitialData(format!("{name}: length scale must be positive, got {b}")));
        }
        Ok(())
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            InitialDataSpec::Gaussian { amplitude, .. } | InitialDataSpec::Bump { amplitude, .. } => amplitude,
            InitialDataSpec::ScaledSingular { fraction, .. } => fraction,
        }
    }

    pub fn with_amplitude(self, a: f64) -> Self {
        match self {
            InitialDataSpec::Gaussian { width, .. } => InitialDataSpec::Gaussian { amplitude: a, width },
            InitialDataSpec::Bump { radius, .. } => InitialDataSpec::Bump { amplitude: a, radius },
            InitialDataSpec::ScaledSingular { cutoff, .. } => InitialDataSpec::ScaledSingular { fraction: a, cutoff },
        }
    }

    /// Pointwise profile. The singular family needs the equilibrium of `params`.
    pub fn profile(&self, dim: u32, p: f64, lambda: f64) -> Result<impl Fn(f64) -> f64> {
        self.validate()?;
        let spec = *self;
        let singular = match spec {
            InitialDataSpec::ScaledSingular { fraction, cutoff } => {
                let c = derive_constants(dim, p, lambda)?.require_equilibrium()?;
                Some((fraction * lambda * c, cutoff))
            }
            _ => None,
        };
        Ok(move |r: f64| match spec {
            InitialDataSpec::Gaussian { amplitude, width } => amplitude * (-(r / width).powi(2)).exp(),
            InitialDataSpec::Bump { amplitude, radius } => {
                let x = r / radius;
                if x < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
            InitialDataSpec::ScaledSingular { .. } => {
                let (scale, cutoff) = singular.expect("checked above");
                let rr = r.max(cutoff);
                scale * rr.powf(-2.0 / (p - 1.0)) * (-(rr * rr - cutoff * cutoff) / 4.0).exp()
            }
        })
    }
}

impl fmt::Display for InitialDataSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InitialDataSpec::Gaussian { amplitude, width } => write!(f, "gaussian:{amplitude}:{width}"),
            InitialDataSpec::Bump { amplitude, radius } => write!(f, "bump:{amplitude}:{radius}"),
            InitialDataSpec::ScaledSingular { fraction, cutoff } => write!(f, "singular:{fraction}:{cutoff}"),
        }
    }
}

impl FromStr for InitialDataSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InitialData(format!("expected kind:a:b, got {s:?}")));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InitialData(format!("not a number: {t:?} in {s:?}")))
        };
        let (a, b) = (num(parts[1])?, num(parts[2])?);
        let spec = match parts[0].trim().to_ascii_lowercase().as_str() {
            "gaussian" => InitialDataSpec::Gaussian { amplitude: a, width: b },
            "bump" => InitialDataSpec::Bump { amplitude: a, radius: b },
            "singular" => InitialDataSpec::ScaledSingular { fraction: a, cutoff: b },
            other => return Err(Error::InitialData(format!("unknown kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for InitialDataSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InitialDataSpec> for String {
    fn from(spec: InitialDataSpec) -> String {
        spec.to_string()
    }
}

/// Pointwise comparison of `u0` with `lambda * u_inf` on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WangReport {
    pub holds: bool,
    pub max_ratio: f64,
    pub r_at_max: f64,
}

/// Largest `f(r_i) / (lambda * u_inf(r_i))` over nodes `r_i > 0`, with its location.
pub fn barrier_ratio(grid: &RadialGrid, values: &[f64], c_np: f64, p: f64, lambda: f64) -> (f64, f64) {
    let exponent = 2.0 / (p - 1.0);
    grid.nodes
        .iter()
        .zip(values)
        .skip(1)
        .map(|(&r, &v)| (v / (lambda * c_np * r.powf(-exponent)), r))
        .fold((f64::NEG_INFINITY, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// Samples `u0` on the grid as a field at `t = s = 0` and checks the barrier.
///
/// The returned field is labelled [`Frame::U`]; at time zero the two frames
/// coincide. The barrier report is `None` when `u_inf` does not exist.
pub fn make_initial_data(grid: &RadialGrid, params: &ProblemParams) -> Result<(Field, Option<WangReport>)> {
    params.validate()?;
    let profile = params.init.profile(grid.dim, params.p, params.lambda)?;
    let mut values = grid.sample(profile);
    values[grid.m] = 0.0;

    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::InitialData(format!("negative or undefined value {v} at r = {}", grid.nodes[i])));
    }
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::InitialData("initial data vanishes on the grid".into()));
    }
    let tail = grid.tail_fraction(&values);
    if tail >= TAIL_REJECT {
        return Err(Error::InitialData(format!(
            "tail fraction {tail:.3e} >= {TAIL_REJECT:e}: data not captured by r_max = {}",
            grid.r_max
        )));
    }
    if tail > TAIL_WARN {
        log::warn!("initial tail fraction {tail:.3e} exceeds {TAIL_WARN:e}");
    }

    let constants = params.constants()?;
    let report = constants.require_equilibrium().ok().map(|c| {
        let (max_ratio, r_at_max) = barrier_ratio(grid, &values, c, params.p, params.lambda);
        WangReport { holds: max_ratio <= 1.0, max_ratio, r_at_max }
    });
    Ok((Field::new(values, Frame::U, 0.0), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(spec: InitialDataSpec) -> ProblemParams {
        ProblemParams::new(3, 5.0, 0.5, spec).unwrap()
    }

    /// Dense scan of `A e^{-r^2/4} sqrt(r) / (lambda C)` on (0, 10].
    fn scanned_ratio(a: f64) -> (f64, f64) {
        let lc = 0.5 * 0.25f64.powf(0.25);
        (1..=1_000_000)
            .map(|k| {
                let r = k as f64 * 1e-5;
                (a * (-r * r / 4.0).exp() * r.sqrt() / lc, r)
            })
            .fold((0.0, 0.0), |b, c| if c.0 > b.0 { c } else { b })
    }

    #[test]
    fn small_gaussian_is_below_barrier() {
        let grid = RadialGrid::new(3, 1024, 16.0).unwrap();
        let (field, report) = make_initial_data(&grid, &params(InitialDataSpec::gaussian(0.1, 2.0))).unwrap();
        assert_eq!(field.frame, Frame::U);
        assert_eq!(field.values[grid.m], 0.0);
        let report = report.unwrap();
        let (oracle, r_oracle) = scanned_ratio(0.1);
        assert_relative_eq!(oracle, 0.2203, max_relative = 1e-3);
        assert_relative_eq!(r_oracle, 1.0, max_relative = 1e-3);
        assert!(report.holds);
        assert_relative_eq!(report.max_ratio, oracle, max_relative = 1e-6);
        assert_relative_eq!(report.r_at_max, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn unit_gaussian_violates_barrier() {
        let grid = RadialGrid::new(3, 1024, 16.0).unwrap();
        let (_, report) = make_initial_data(&grid, &params(InitialDataSpec::gaussian(1.0, 2.0))).unwrap();
        let report = report.unwrap();
        let (oracle, _) = scanned_ratio(1.0);
        assert!(!report.holds);
        assert_relative_eq!(report.max_ratio, oracle, max_relative = 1e-6);
        assert_relative_eq!(report.max_ratio, 2.203, max_relative = 1e-3);
        assert_relative_eq!(report.r_at_max, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn trivial_bump_rejected() {
        let spec = InitialDataSpec::Bump { amplitude: 0.0, radius: 2.0 };
        assert!(spec.validate().is_err());
        assert!(ProblemParams::new(3, 5.0, 0.5, spec).is_err());
        assert!("bump:0:2".parse::<InitialDataSpec>().is_err());
    }

    #[test]
    fn wide_gaussian_leaves_weighted_space() {
        // width^2 > 8 makes u0^2 rho grow at infinity.
        let grid = RadialGrid::new(3, 512, 16.0).unwrap();
        let err = make_initial_data(&grid, &params(InitialDataSpec::gaussian(0.1, 3.5))).unwrap_err();
        assert!(err.to_string().contains("tail fraction"));
    }

    #[test]
    fn singular_profile_touches_fraction_at_cutoff() {
        let grid = RadialGrid::new(3, 1024, 16.0).unwrap();
        let spec = InitialDataSpec::ScaledSingular { fraction: 0.9, cutoff: 0.5 };
        let (_, report) = make_initial_data(&grid, &params(spec)).unwrap();
        let report = report.unwrap();
        assert!(report.holds);
        assert_relative_eq!(report.max_ratio, 0.9, max_relative = 1e-12);
        assert_relative_eq!(report.r_at_max, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn no_barrier_without_equilibrium() {
        let grid = RadialGrid::new(3, 256, 16.0).unwrap();
        let p = ProblemParams::new(3, 1.5, 0.5, InitialDataSpec::gaussian(1.0, 2.0)).unwrap();
        let (_, report) = make_initial_data(&grid, &p).unwrap();
        assert!(report.is_none());
    }

    #[test]
    fn spec_text_round_trip() {
        for text in ["gaussian:0.1:2", "bump:1.5:3", "singular:0.9:0.5"] {
            let spec: InitialDataSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert!("gaussian:0.1".parse::<InitialDataSpec>().is_err());
        assert!("cone:1:1".parse::<InitialDataSpec>().is_err());
    }
}
