//! Closed-form constants of the semilinear heat problem and the analytic
//! barrier functions built from them.
//!
//! Everything here is a pure function of `(N, p, lambda)`. Quantities that
//! only make sense under extra hypotheses are returned as [`Gated`] values:
//! either the number, or the hypothesis that failed.

use serde::Serialize;

use crate::dynamics::InitialDataSpec;
use crate::error::{Error, Hypothesis, Result};

/// Tolerance on `|p - p*|` under which the exponent is declared critical.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// A constant that exists only under some hypothesis.
pub type Gated = std::result::Result<f64, Hypothesis>;

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ProblemParams {
    /// Spatial dimension N.
    pub dim: u32,
    /// Nonlinearity exponent.
    pub p: f64,
    /// Barrier fraction in (0, 1).
    pub lambda: f64,
    pub init: InitialDataSpec,
}

impl ProblemParams {
    pub fn new(dim: u32, p: f64, lambda: f64, init: InitialDataSpec) -> Result<Self> {
        let params = ProblemParams { dim, p, lambda, init };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        validate_scalars(self.dim, self.p, self.lambda)?;
        self.init.validate()
    }

    pub fn constants(&self) -> Result<DerivedConstants> {
        derive_constants(self.dim, self.p, self.lambda)
    }
}

fn validate_scalars(dim: u32, p: f64, lambda: f64) -> Result<()> {
    if dim < 1 {
        return Err(Error::InvalidParams(format!("dimension must be at least 1, got {dim}")));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParams(format!("p must exceed 1, got {p}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParams(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    SubcriticalFujita,
    CriticalFujita,
    Supercritical,
}

/// Position of `p` relative to the Fujita exponent `1 + 2/N`.
///
/// The comparison is done on `p*N` against the integer `N + 2`, so the
/// critical case is only reported within [`CRITICAL_TOLERANCE`].
pub fn classify_regime(dim: u32, p: f64) -> Regime {
    let n = f64::from(dim);
    let excess = p * n - (n + 2.0);
    if excess.abs() <= CRITICAL_TOLERANCE * n {
        Regime::CriticalFujita
    } else if excess < 0.0 {
        Regime::SubcriticalFujita
    } else {
        Regime::Supercritical
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    pub dim: u32,
    pub p: f64,
    pub lambda: f64,
    pub p_star: f64,
    pub p_tilde: Gated,
    pub gamma: f64,
    pub c_np: Gated,
    pub lambda_max: Gated,
    pub wang_coeff: f64,
    pub big_b: Gated,
    pub s1: Gated,
    pub mu_s1: Gated,
    pub a: Gated,
    pub regime: Regime,
}

/// `f(s) = e^s / (e^s - 1)`, computed without cancellation for small `s`.
pub fn switch_fn(s: f64) -> f64 {
    1.0 / (-(-s).exp_m1())
}

/// Inverse of [`switch_fn`] on `(1, inf)`.
pub fn switch_fn_inverse(w: f64) -> f64 {
    -(-1.0 / w).ln_1p()
}

pub fn derive_constants(dim: u32, p: f64, lambda: f64) -> Result<DerivedConstants> {
    validate_scalars(dim, p, lambda)?;
    let n = f64::from(dim);
    let pm1 = p - 1.0;
    let regime = classify_regime(dim, p);

    let p_star = 1.0 + 2.0 / n;
    let p_tilde = match dim {
        0..=2 => Err(Hypothesis::DimensionAtLeastThree),
        3 => Ok(n / (n - 2.0)),
        _ => Ok(1.0 + 4.0 / n),
    };
    let gamma = n / 2.0 - 1.0 / pm1;

    let c_np = if dim < 3 {
        Err(Hypothesis::DimensionAtLeastThree)
    } else {
        let bracket = (2.0 / pm1) * (n - 2.0 * p / pm1);
        if bracket < 0.0 {
            Err(Hypothesis::EquilibriumExponent)
        } else {
            Ok(bracket.powf(1.0 / pm1))
        }
    };

    let barrier = lambda.powf(1.0 - p) - 1.0;
    let wang_coeff = (barrier * pm1).powf(-1.0 / pm1);

    let supercritical = regime == Regime::Supercritical && gamma > 0.0;
    let (lambda_max, big_b) = if supercritical {
        let lm = ((3.0 * p - 1.0) / (gamma * pm1 * pm1) + 1.0).powf(1.0 / (1.0 - p));
        let b = gamma * pm1 * pm1 * barrier / (3.0 * p - 1.0);
        (Ok(lm), Ok(b))
    } else {
        (Err(Hypothesis::Supercritical), Err(Hypothesis::Supercritical))
    };

    let (s1, mu_s1, a) = match big_b {
        Ok(b) if b > 1.0 => {
            let w = 0.5 * (1.0 + b);
            let s1 = switch_fn_inverse(w);
            let mu = pm1 * gamma - (3.0 * p - 1.0) / (barrier * pm1) * w;
            (Ok(s1), Ok(mu), Ok(0.5 * mu))
        }
        Ok(_) => (
            Err(Hypothesis::LambdaBelowMax),
            Err(Hypothesis::LambdaBelowMax),
            Err(Hypothesis::LambdaBelowMax),
        ),
        Err(h) => (Err(h), Err(h), Err(h)),
    };

    Ok(DerivedConstants {
        dim,
        p,
        lambda,
        p_star,
        p_tilde,
        gamma,
        c_np,
        lambda_max,
        wang_coeff,
        big_b,
        s1,
        mu_s1,
        a,
        regime,
    })
}

fn require(value: Gated, name: &str) -> Result<f64> {
    value.map_err(|h| Error::hypothesis(h, format!("{name} is undefined")))
}

impl DerivedConstants {
    /// Fields in output order, with absent values as `Err`.
    pub fn fields(&self) -> Vec<(&'static str, Gated)> {
        vec![
            ("p_star", Ok(self.p_star)),
            ("p_tilde", self.p_tilde),
            ("gamma", Ok(self.gamma)),
            ("c_np", self.c_np),
            ("lambda_max", self.lambda_max),
            ("wang_coeff", Ok(self.wang_coeff)),
            ("big_b", self.big_b),
            ("s1", self.s1),
            ("mu_s1", self.mu_s1),
            ("a", self.a),
        ]
    }

    pub fn require_supercritical(&self) -> Result<f64> {
        if self.regime == Regime::Supercritical && self.gamma > 0.0 {
            Ok(self.gamma)
        } else {
            Err(Error::hypothesis(
                Hypothesis::Supercritical,
                format!("p = {} with N = {} gives gamma = {}", self.p, self.dim, self.gamma),
            ))
        }
    }

    /// The singular equilibrium coefficient, rejected when it degenerates to 0.
    pub fn require_equilibrium(&self) -> Result<f64> {
        let c = require(self.c_np, "C(N,p)")?;
        let n = f64::from(self.dim);
        if self.p <= n / (n - 2.0) || c <= 0.0 {
            return Err(Error::hypothesis(
                Hypothesis::EquilibriumExponent,
                format!("p = {} does not exceed N/(N-2) = {}; u_inf is degenerate", self.p, n / (n - 2.0)),
            ));
        }
        Ok(c)
    }

    pub fn require_lambda_below_max(&self) -> Result<()> {
        let lm = require(self.lambda_max, "lambda_max")?;
        if self.lambda >= lm {
            return Err(Error::hypothesis(
                Hypothesis::LambdaBelowMax,
                format!("lambda = {} is not below lambda_max = {:.6}", self.lambda, lm),
            ));
        }
        Ok(())
    }

    pub fn require_norm_bound_exponent(&self) -> Result<f64> {
        let pt = require(self.p_tilde, "p_tilde")?;
        if self.p <= pt {
            return Err(Error::hypothesis(
                Hypothesis::NormBoundExponent,
                format!("p = {} does not exceed p_tilde = {}", self.p, pt),
            ));
        }
        Ok(pt)
    }

    /// Coefficient `(p-1)N/2 - 2` multiplying g in the weighted-norm bound.
    pub fn gbound_coefficient(&self) -> f64 {
        (self.p - 1.0) * f64::from(self.dim) / 2.0 - 2.0
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("dim".into(), self.dim.into());
        map.insert("p".into(), self.p.into());
        map.insert("lambda".into(), self.lambda.into());
        for (name, value) in self.fields() {
            match value {
                Ok(v) => {
                    map.insert(name.into(), v.into());
                }
                Err(h) => {
                    map.insert(name.into(), serde_json::Value::Null);
                    map.insert(format!("{name}_absent"), h.to_string().into());
                }
            }
        }
        map.insert("regime".into(), serde_json::to_value(self.regime).expect("enum serializes"));
        serde_json::Value::Object(map)
    }
}

/// `mu(s) = (p-1)gamma - (3p-1)/((lambda^{1-p}-1)(p-1)) * f(s)`.
pub fn mu_of_s(s: f64, dim: u32, p: f64, lambda: f64) -> Result<f64> {
    validate_scalars(dim, p, lambda)?;
    if !(s > 0.0) {
        return Err(Error::InvalidParams(format!("mu(s) requires s > 0, got {s}")));
    }
    let pm1 = p - 1.0;
    let gamma = f64::from(dim) / 2.0 - 1.0 / pm1;
    let k = (3.0 * p - 1.0) / ((lambda.powf(1.0 - p) - 1.0) * pm1);
    Ok(pm1 * gamma - k * switch_fn(s))
}

/// Singular equilibrium `C(N,p) r^{-2/(p-1)}`.
pub fn u_infinity_profile(r: f64, dim: u32, p: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("u_inf is singular at r = {r}")));
    }
    // lambda does not enter C(N,p); any admissible value works here.
    let c = derive_constants(dim, p, 0.5)?.require_equilibrium()?;
    Ok(c * r.powf(-2.0 / (p - 1.0)))
}

/// Upper bound on the rescaled solution, `wang_coeff * f(s)^{1/(p-1)}`.
pub fn wang_envelope_v(s: f64, p: f64, lambda: f64) -> Result<f64> {
    validate_scalars(1, p, lambda)?;
    if !(s > 0.0) {
        return Err(Error::InvalidParams(format!("envelope diverges at s = {s}")));
    }
    let coeff = ((lambda.powf(1.0 - p) - 1.0) * (p - 1.0)).powf(-1.0 / (p - 1.0));
    Ok(coeff * switch_fn(s).powf(1.0 / (p - 1.0)))
}

/// Upper bound on the original solution, `[(lambda^{1-p}-1)(p-1)t]^{-1/(p-1)}`.
pub fn wang_envelope_u(t: f64, p: f64, lambda: f64) -> Result<f64> {
    validate_scalars(1, p, lambda)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParams(format!("envelope diverges at t = {t}")));
    }
    Ok(((lambda.powf(1.0 - p) - 1.0) * (p - 1.0) * t).powf(-1.0 / (p - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LqExponents {
    /// Decay exponent obtained through the weighted L2 route and the barrier.
    pub weighted_rate: f64,
    /// Linear-heat-like exponent `(N/2)(1 - 1/q)`.
    pub heat_rate: f64,
}

pub fn lq_exponents(dim: u32, p: f64, q: f64) -> Result<LqExponents> {
    if !(q >= 2.0) {
        return Err(Error::InvalidParams(format!("q must be at least 2, got {q}")));
    }
    let n = f64::from(dim);
    let inv = 1.0 / (p - 1.0);
    let weighted_rate = if q.is_infinite() { inv } else { inv + (2.0 / q) * (n / 4.0 - inv) };
    let heat_rate = if q.is_infinite() { n / 2.0 } else { (n / 2.0) * (1.0 - 1.0 / q) };
    Ok(LqExponents { weighted_rate, heat_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn default_constants() -> DerivedConstants {
        derive_constants(3, 5.0, 0.5).unwrap()
    }

    #[test]
    fn reference_values_n3_p5() {
        let c = default_constants();
        assert_relative_eq!(c.p_star, 5.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(c.p_tilde.unwrap(), 3.0, max_relative = 1e-12);
        assert_relative_eq!(c.gamma, 1.25, max_relative = 1e-12);
        assert_relative_eq!(c.c_np.unwrap(), 0.25f64.powf(0.25), max_relative = 1e-12);
        assert_relative_eq!(c.lambda_max.unwrap(), 1.7f64.powf(-0.25), max_relative = 1e-12);
        assert_relative_eq!(c.wang_coeff, 60f64.powf(-0.25), max_relative = 1e-12);
        assert_relative_eq!(c.big_b.unwrap(), 150.0 / 7.0, max_relative = 1e-12);
        let w: f64 = (1.0 + 150.0 / 7.0) / 2.0;
        assert_relative_eq!(c.s1.unwrap(), (w / (w - 1.0)).ln(), max_relative = 1e-12);
        assert_relative_eq!(c.s1.unwrap(), 0.093401, max_relative = 1e-5);
        assert_relative_eq!(c.mu_s1.unwrap(), 5.0 - 14.0 / 60.0 * w, max_relative = 1e-12);
        assert_relative_eq!(c.mu_s1.unwrap(), 2.383333, max_relative = 1e-6);
        assert_relative_eq!(c.a.unwrap(), 1.191667, max_relative = 1e-6);
        assert_eq!(c.regime, Regime::Supercritical);
    }

    #[test]
    fn critical_dimension_two_rejects_decay() {
        let c = derive_constants(2, 2.0, 0.5).unwrap();
        assert_eq!(c.p_star, 2.0);
        assert_eq!(c.gamma, 0.0);
        assert_eq!(c.regime, Regime::CriticalFujita);
        assert!(c.require_supercritical().is_err());
        assert_eq!(c.lambda_max, Err(Hypothesis::Supercritical));
        assert_eq!(c.p_tilde, Err(Hypothesis::DimensionAtLeastThree));
    }

    #[test]
    fn degenerate_equilibrium_at_p_equal_n_over_n_minus_two() {
        let c = derive_constants(3, 3.0, 0.5).unwrap();
        assert_eq!(c.c_np.unwrap(), 0.0);
        let err = c.require_equilibrium().unwrap_err();
        assert!(matches!(err, Error::Hypothesis { hypothesis: Hypothesis::EquilibriumExponent, .. }));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(derive_constants(3, 1.0, 0.5).is_err());
        assert!(derive_constants(3, 0.5, 0.5).is_err());
        assert!(derive_constants(3, 5.0, 0.0).is_err());
        assert!(derive_constants(3, 5.0, 1.0).is_err());
        assert!(derive_constants(0, 5.0, 0.5).is_err());
    }

    #[test]
    fn lambda_gate_names_hypothesis() {
        let c = derive_constants(3, 5.0, 0.9).unwrap();
        let err = c.require_lambda_below_max().unwrap_err();
        assert!(matches!(err, Error::Hypothesis { hypothesis: Hypothesis::LambdaBelowMax, .. }));
        assert_eq!(c.s1, Err(Hypothesis::LambdaBelowMax));
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(3, 1.5), Regime::SubcriticalFujita);
        assert_eq!(classify_regime(2, 2.0), Regime::CriticalFujita);
        assert_eq!(classify_regime(3, 5.0 / 3.0), Regime::CriticalFujita);
        assert_eq!(classify_regime(3, 5.0), Regime::Supercritical);
        assert_eq!(classify_regime(3, 5.0 / 3.0 + 1e-9), Regime::Supercritical);
    }

    #[test]
    fn u_infinity_examples() {
        assert_relative_eq!(u_infinity_profile(1.0, 3, 5.0).unwrap(), 0.7071067811865476, max_relative = 1e-12);
        assert_relative_eq!(u_infinity_profile(4.0, 3, 5.0).unwrap(), 0.3535533905932738, max_relative = 1e-12);
        assert_relative_eq!(u_infinity_profile(1.0, 4, 3.0).unwrap(), 1.0, max_relative = 1e-12);
        assert!(u_infinity_profile(0.0, 3, 5.0).is_err());
        assert!(u_infinity_profile(-1.0, 3, 5.0).is_err());
        assert!(u_infinity_profile(1.0, 3, 3.0).is_err());
    }

    #[test]
    fn envelope_examples() {
        let big_s = wang_envelope_v(60.0, 5.0, 0.5).unwrap();
        assert_relative_eq!(big_s, 60f64.powf(-0.25), max_relative = 1e-12);
        assert_relative_eq!(wang_envelope_u(1.0, 5.0, 0.5).unwrap(), 60f64.powf(-0.25), max_relative = 1e-12);
        let s = 1.0f64;
        let t = s.exp() - 1.0;
        let lhs = wang_envelope_v(s, 5.0, 0.5).unwrap();
        let rhs = (t + 1.0).powf(0.25) * wang_envelope_u(t, 5.0, 0.5).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        assert!(wang_envelope_v(0.0, 5.0, 0.5).is_err());
        assert!(wang_envelope_u(-1.0, 5.0, 0.5).is_err());
    }

    #[test]
    fn lq_examples() {
        let e2 = lq_exponents(3, 5.0, 2.0).unwrap();
        assert_relative_eq!(e2.weighted_rate, 0.75, max_relative = 1e-12);
        assert_relative_eq!(e2.heat_rate, 0.75, max_relative = 1e-12);
        let e4 = lq_exponents(3, 5.0, 4.0).unwrap();
        assert_relative_eq!(e4.weighted_rate, 0.5, max_relative = 1e-12);
        assert_relative_eq!(e4.heat_rate, 1.125, max_relative = 1e-12);
        let einf = lq_exponents(3, 5.0, f64::INFINITY).unwrap();
        assert_relative_eq!(einf.weighted_rate, 0.25, max_relative = 1e-12);
        assert_relative_eq!(lq_exponents(3, 5.0, 1e12).unwrap().weighted_rate, 0.25, max_relative = 1e-9);
        assert!(lq_exponents(3, 5.0, 1.5).is_err());
    }

    #[test]
    fn mu_examples() {
        let c = default_constants();
        let mu1 = mu_of_s(c.s1.unwrap(), 3, 5.0, 0.5).unwrap();
        assert_relative_eq!(mu1, c.mu_s1.unwrap(), max_relative = 1e-12);
        assert_relative_eq!(mu_of_s(60.0, 3, 5.0, 0.5).unwrap(), 5.0 - 14.0 / 60.0, max_relative = 1e-12);
        let b = c.big_b.unwrap();
        let s_star = (b / (b - 1.0)).ln();
        assert_relative_eq!(s_star, 0.047790, max_relative = 1e-4);
        assert!(mu_of_s(s_star, 3, 5.0, 0.5).unwrap().abs() < 1e-12);
        assert!(mu_of_s(0.0, 3, 5.0, 0.5).is_err());
    }

    #[test]
    fn json_marks_absent_fields() {
        let c = derive_constants(2, 3.0, 0.5).unwrap();
        let json = c.to_json();
        assert!(json["c_np"].is_null());
        assert!(json["c_np_absent"].as_str().unwrap().contains("N >= 3"));
        assert_eq!(default_constants().to_json()["gamma"], 1.25);
    }

    proptest! {
        #[test]
        fn supercritical_iff_gamma_positive(dim in 1u32..8, p in 1.01f64..12.0) {
            let c = derive_constants(dim, p, 0.5).unwrap();
            prop_assert_eq!(c.regime == Regime::Supercritical, c.gamma > 0.0);
        }

        #[test]
        fn lambda_max_iff_b_above_one(dim in 3u32..8, p in 1.05f64..12.0, lambda in 0.01f64..0.99) {
            let c = derive_constants(dim, p, lambda).unwrap();
            prop_assume!(c.gamma > 1e-6);
            let lm = c.lambda_max.unwrap();
            prop_assume!((lambda - lm).abs() > 1e-9);
            prop_assert_eq!(lambda < lm, c.big_b.unwrap() > 1.0);
        }

        #[test]
        fn s1_inverts_switch_fn(dim in 3u32..8, p in 1.05f64..12.0, lambda in 0.01f64..0.99) {
            let c = derive_constants(dim, p, lambda).unwrap();
            if let (Ok(s1), Ok(b)) = (c.s1, c.big_b) {
                let w = 0.5 * (1.0 + b);
                prop_assert!((switch_fn(s1) - w).abs() <= 1e-9 * w);
                prop_assert!(c.mu_s1.unwrap() > 0.0);
                prop_assert_eq!(c.a.unwrap(), 0.5 * c.mu_s1.unwrap());
            }
        }

        #[test]
        fn mu_sign_structure(frac in 0.01f64..0.99, ds in 0.001f64..20.0) {
            let c = derive_constants(3, 5.0, 0.5).unwrap();
            let b = c.big_b.unwrap();
            let s_star = switch_fn_inverse(b);
            let s1 = c.s1.unwrap();
            prop_assert!(mu_of_s(s1 + ds, 3, 5.0, 0.5).unwrap() > 0.0);
            prop_assert!(mu_of_s(frac * s_star, 3, 5.0, 0.5).unwrap() < 0.0);
        }

        #[test]
        fn envelope_decreases_to_coefficient(s in 0.01f64..30.0, ds in 0.01f64..5.0) {
            let coeff = derive_constants(3, 5.0, 0.5).unwrap().wang_coeff;
            let a = wang_envelope_v(s, 5.0, 0.5).unwrap();
            let b = wang_envelope_v(s + ds, 5.0, 0.5).unwrap();
            prop_assert!(b <= a);
            prop_assert!(b >= coeff);
        }
    }
}
