//! The thirteen acceptance criteria, runnable from tests and from the CLI.
//!
//! Reference values are recomputed here from closed forms rather than read
//! back from the library, so each criterion compares two independent routes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::constants::derive_constants;
use crate::diagnostics::{entropy, entropy_balance, k_weighted_growth, production_balance, weighted_k_integral};
use crate::dynamics::{InitialDataSpec, Trajectory};
use crate::error::Result;
use crate::experiments::decay::{run_decay_experiment, DecayReport, SlopeCheck};
use crate::experiments::{run_cross_frame_check, run_fujita_scan, run_negative_entropy_test, run_wang_audit};
use crate::grid::RadialGrid;
use crate::output::{render_evolve, write_run, RenderedRun};
use crate::parallel::Execution;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("[{}] {:>2} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

fn result(id: u8, name: &'static str, outcome: Result<(bool, String)>) -> CriterionResult {
    match outcome {
        Ok((pass, detail)) => CriterionResult { id, name, pass, detail },
        Err(e) => CriterionResult { id, name, pass: false, detail: format!("error: {e}") },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Desk configuration used by the run-based criteria.
pub fn desk_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    // Dense sampling keeps centered-difference truncation below the 1% balance tolerance.
    cfg.stepping.sample_every = 10;
    cfg.experiment.fit_window = vec![2.0, 6.0];
    cfg
}

pub fn constants_criterion() -> CriterionResult {
    result(1, "constants", (|| {
        let c = derive_constants(3, 5.0, 0.5)?;
        let w: f64 = (1.0 + 150.0 / 7.0) / 2.0;
        let mu_s1 = 5.0 - 14.0 / 60.0 * w;
        // (name, computed, closed form, quoted literal)
        let rows = [
            ("gamma", c.gamma, 1.25, 1.25),
            ("C", c.c_np.unwrap_or(f64::NAN), 0.25f64.powf(0.25), 0.707107),
            ("lambda_max", c.lambda_max.unwrap_or(f64::NAN), 1.7f64.powf(-0.25), 0.875806),
            ("wang_coeff", c.wang_coeff, 60f64.powf(-0.25), 0.359301),
            ("B", c.big_b.unwrap_or(f64::NAN), 150.0 / 7.0, 21.428571),
            ("s1", c.s1.unwrap_or(f64::NAN), (w / (w - 1.0)).ln(), 0.093404),
            ("a", c.a.unwrap_or(f64::NAN), mu_s1 / 2.0, 1.191667),
            ("p*", c.p_star, 5.0 / 3.0, 1.666667),
            ("p~", c.p_tilde.unwrap_or(f64::NAN), 3.0, 3.0),
        ];
        let worst = rows.iter().map(|r| rel(r.1, r.2)).fold(0.0, f64::max);
        let literal_gaps: Vec<String> = rows
            .iter()
            .filter(|r| rel(r.2, r.3) > 1e-6)
            .map(|r| format!("{} quoted {} vs closed form {:.7} ({:.1e} rel)", r.0, r.3, r.2, rel(r.2, r.3)))
            .collect();
        let mut detail = format!("max rel error vs closed forms {worst:.1e}");
        if !literal_gaps.is_empty() {
            detail.push_str(&format!("; quoted literals off their own formulas: {}", literal_gaps.join(", ")));
        }
        Ok((worst < 1e-6, detail))
    })())
}

pub fn operator_criterion() -> CriterionResult {
    result(2, "operator fidelity", (|| {
        let grid = RadialGrid::new(3, 2048, 16.0)?;
        let phi = grid.sample(|r| (-r * r / 4.0).exp());
        let lphi = grid.apply_l(&phi);
        let eig_err = grid
            .nodes
            .iter()
            .zip(lphi.iter().zip(&phi))
            .filter(|(r, _)| **r <= 0.9 * grid.r_max)
            .map(|(_, (l, f))| (l - 1.5 * f).abs())
            .fold(0.0, f64::max);
        let equality = grid.dirichlet(&phi) / grid.weighted_inner(&phi, &phi) / 1.5;

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut worst = f64::INFINITY;
        for _ in 0..50 {
            let terms: Vec<(f64, f64, f64, f64)> = (0..3)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.3..1.5), rng.random_range(0.0..3.0)))
                .collect();
            let mut f = grid.sample(|r| {
                terms.iter().map(|&(c, b, a, m)| c * (1.0 + b * r * r) * (-a * (r - m).powi(2) - 0.25 * r * r).exp()).sum()
            });
            f[grid.m] = 0.0;
            worst = worst.min(grid.dirichlet(&f) / grid.weighted_inner(&f, &f));
        }
        let pass = eig_err < 1e-3 && (equality - 1.0).abs() < 5e-3 && worst >= 1.5 * (1.0 - 1e-3);
        Ok((
            pass,
            format!(
                "eigen residual {eig_err:.2e} (<1e-3); Poincare equality ratio {equality:.5}; min Rayleigh quotient over 50 fields {worst:.5} (>= {:.5})",
                1.5 * (1.0 - 1e-3)
            ),
        ))
    })())
}

fn balance_criteria(tr: &Trajectory, gamma: f64) -> [CriterionResult; 2] {
    let samples: Vec<_> = tr.all_samples().cloned().collect();
    let eb = entropy_balance(&samples, (0.5, 4.0));
    let pb = production_balance(&samples, (0.5, 4.0), gamma);
    let worst = |v: &[(f64, f64)]| v.iter().map(|x| x.1).fold(0.0, f64::max);
    let (we, wp) = (worst(&eb), worst(&pb));
    [
        CriterionResult {
            id: 3,
            name: "entropy balance",
            pass: !eb.is_empty() && we < 0.01,
            detail: format!("max |dE/ds + I|/I = {:.3}% over {} samples in s in [0.5, 4]", 100.0 * we, eb.len()),
        },
        CriterionResult {
            id: 4,
            name: "production balance",
            pass: !pb.is_empty() && wp < 0.05,
            detail: format!("max |dI/ds + 2 gamma I + 2R|/I = {:.3}% over {} samples", 100.0 * wp, pb.len()),
        },
    ]
}

fn show(name: &str, c: &SlopeCheck) -> String {
    match (&c.fit, &c.fit_error) {
        (Some(f), _) => format!("{name} {:.4} (target {:.4}, resid {:.1e})", f.slope, c.target, f.residual),
        (None, Some(e)) => format!("{name} fit failed: {e}"),
        _ => format!("{name} missing"),
    }
}

fn rate_criteria(r: &DecayReport) -> [CriterionResult; 2] {
    let lq4 = r.norm_lq_u.iter().find(|(q, _)| *q == 4.0).map(|(_, c)| c);
    [
        CriterionResult {
            id: 5,
            name: "decay rates",
            pass: r.norm_v.pass && r.entropy.pass && r.production.pass,
            detail: [show("||v||", &r.norm_v), show("E", &r.entropy), show("I", &r.production)].join("; "),
        },
        CriterionResult {
            id: 6,
            name: "u-frame rates",
            pass: r.norm_l2_u.pass && lq4.is_some_and(|c| c.pass),
            detail: format!(
                "{}; {}",
                show("||u||_2", &r.norm_l2_u),
                lq4.map_or("||u||_4 not tracked".into(), |c| show("||u||_4 (one-sided)", c))
            ),
        },
    ]
}

fn gbound_criterion(r: &DecayReport) -> CriterionResult {
    CriterionResult {
        id: 7,
        name: "weighted-norm bound",
        pass: r.gbound_min_relative.is_some_and(|m| m >= -1e-8),
        detail: match r.gbound_min_relative {
            Some(m) => format!("min relative margin {m:.4e} (>= -1e-8)"),
            None => "not evaluated".into(),
        },
    }
}

fn k_criterion(tr: &Trajectory, cfg: &RunConfig) -> CriterionResult {
    result(8, "K-functional structure", (|| {
        let c = derive_constants(cfg.problem.dim, cfg.problem.p, cfg.problem.lambda)?;
        let (gamma, s1) = (c.gamma, c.s1.map_err(|h| crate::Error::Hypothesis { hypothesis: h, detail: "s1".into() })?);
        let a = c.a.map_err(|h| crate::Error::Hypothesis { hypothesis: h, detail: "a".into() })?;
        let samples: Vec<_> = tr.all_samples().cloned().collect();
        let sign = samples
            .iter()
            .filter(|x| x.functionals.production > 0.0)
            .map(|x| (x.functionals.r + 0.5 * x.functionals.k) / x.functionals.production)
            .fold(f64::INFINITY, f64::min);
        let growth = k_weighted_growth(&samples, 2.0 * gamma + a, s1);
        let i6 = weighted_k_integral(&samples, gamma, 6.0);
        let i8 = weighted_k_integral(&samples, gamma, 8.0);
        let change = rel(i8, i6);
        Ok((
            sign >= -1e-3 && growth <= 0.01 && change < 0.01 && i8.is_finite(),
            format!(
                "min (R + K/2)/I = {sign:.4}; max step growth of K e^(2g+a)s = {:.3}%; int e^(2gs) K: {i6:.6e} -> {i8:.6e} ({:.2e} rel)",
                100.0 * growth,
                change
            ),
        ))
    })())
}

pub fn wang_criterion(cfg: &RunConfig) -> CriterionResult {
    result(9, "barrier audit", run_wang_audit(cfg).map(|r| {
        (
            r.pass,
            format!(
                "max v/(lambda u_inf) = {:.4} at s = {:.2}; max sup v / envelope = {:.4} at s = {:.2}",
                r.worst_barrier_ratio, r.worst_barrier_s, r.worst_envelope_ratio, r.worst_envelope_s
            ),
        )
    }))
}

/// `E(A phi1)` from Gaussian integrals.
pub fn entropy_of_scaled_phi1(dim: u32, p: f64, amplitude: f64) -> f64 {
    let n = f64::from(dim);
    let quad = (4.0 * PI).powf(n / 2.0);
    let power = (4.0 * PI / p).powf(n / 2.0);
    amplitude.powi(2) * (n / 4.0 - 1.0 / (2.0 * (p - 1.0))) * quad - amplitude.powf(p + 1.0) / (p + 1.0) * power
}

pub fn blowup_criterion(cfg: &RunConfig) -> CriterionResult {
    result(10, "blow-up", (|| {
        let mut big = cfg.clone();
        big.problem.init = InitialDataSpec::gaussian(3.0, 2.0);
        big.stepping.horizon = 5.0;
        let grid = big.build_grid()?;
        let u0 = grid.sample(|r| 3.0 * (-r * r / 4.0).exp());
        let e_quad = entropy(&grid, 5.0, &u0);
        let e_oracle = entropy_of_scaled_phi1(3, 5.0, 3.0);
        let neg = run_negative_entropy_test(&big)?;
        let s_hit = neg.s_at_threshold;

        let mut sub = cfg.clone();
        sub.problem.p = 1.5;
        sub.problem.init = InitialDataSpec::gaussian(1.0, 2.0);
        sub.stepping.horizon = 51f64.ln();
        let g = sub.build_grid()?;
        let problem = sub.problem(&g)?;
        let (tr, _) = crate::dynamics::run(&problem, crate::grid::Frame::V, &sub.controls())?;
        let tb = tr.outcome.status.t_blowup();

        let pass = e_quad < 0.0
            && rel(e_quad, e_oracle) < 5e-3
            && neg.applicable
            && s_hit.is_some_and(|s| s < 5.0)
            && tb.is_some_and(|t| t < 50.0);
        Ok((
            pass,
            format!(
                "E(u0) = {e_quad:.3} (oracle {e_oracle:.3}); A=3 p=5 blow-up at s = {}; A=1 p=1.5 t_b estimate {}",
                s_hit.map_or("none".into(), |s| format!("{s:.4}")),
                tb.map_or(format!("none ({})", tr.outcome.reason), |t| format!("{t:.3}"))
            ),
        ))
    })())
}

pub fn cross_frame_criterion(cfg: &RunConfig) -> CriterionResult {
    result(11, "cross-frame", (|| {
        let dt = cfg.stepping.dt;
        let a = run_cross_frame_check(cfg, 1.0, dt, dt)?;
        let b = run_cross_frame_check(cfg, 1.0, dt / 2.0, dt / 2.0)?;
        Ok((
            a.discrepancy < 0.01 && b.discrepancy < a.discrepancy,
            format!("discrepancy {:.3e} at dt = {dt:e}, {:.3e} at dt/2", a.discrepancy, b.discrepancy),
        ))
    })())
}

pub fn scan_criterion(cfg: &RunConfig) -> CriterionResult {
    let ps = [1.5, 5.0 / 3.0, 5.0];
    let amps = [0.05, 0.5, 3.0];
    let serial = run_fujita_scan(&ps, &amps, cfg, Execution::Serial);
    let parallel = run_fujita_scan(&ps, &amps, cfg, Execution::Parallel);
    let same = serial == parallel;
    let fujita = serial.fujita_violations().is_empty();
    let low = serial.cell(5.0, 0.05).is_some_and(|c| c.is_decayed());
    let high = serial.cell(5.0, 3.0).is_some_and(|c| c.is_blown_up());
    let labels: Vec<String> = serial
        .cells
        .iter()
        .map(|row| format!("p={:.4}: {}", row[0].p, row.iter().map(|c| c.label()).collect::<Vec<_>>().join("/")))
        .collect();
    CriterionResult {
        id: 12,
        name: "phase scan",
        pass: same && fujita && low && high,
        detail: format!(
            "{}; serial == parallel: {same}; monotonicity violations: {}",
            labels.join(", "),
            serial.monotonicity_violations().len()
        ),
    }
}

pub fn determinism_criterion(cfg: &RunConfig) -> CriterionResult {
    result(13, "determinism", (|| {
        let dir = std::env::temp_dir().join(format!("semiheat-acceptance-{}", std::process::id()));
        let mut first_cfg = cfg.clone();
        first_cfg.experiment.csv = dir.join("run.csv").to_string_lossy().into_owned();
        first_cfg.experiment.json = dir.join("run.json").to_string_lossy().into_owned();
        let read = |c: &RunConfig| -> Result<RenderedRun> {
            let (_, out) = render_evolve(c)?;
            write_run(c, &out)?;
            let get = |p: std::path::PathBuf| std::fs::read_to_string(&p).map_err(|source| crate::Error::Io { path: p, source });
            Ok(RenderedRun { csv: get(c.csv_path().expect("set"))?, json: get(c.json_path().expect("set"))? })
        };
        let first = read(&first_cfg)?;
        let echoed: serde_json::Value = serde_json::from_str(&first.json).map_err(|e| crate::Error::InvalidParams(e.to_string()))?;
        let text = echoed["config_toml"].as_str().unwrap_or_default();
        let second = read(&crate::config::parse_config(text)?)?;
        let _ = std::fs::remove_dir_all(&dir);
        Ok((
            first == second,
            format!(
                "CSV {} bytes, JSON {} bytes; identical on re-run from echoed config: {}",
                first.csv.len(),
                first.json.len(),
                first == second
            ),
        ))
    })())
}

/// Runs every criterion in order.
pub fn run_acceptance() -> Vec<CriterionResult> {
    let cfg = desk_config();
    let mut out = vec![constants_criterion(), operator_criterion()];
    match run_decay_experiment(&cfg) {
        Ok((report, tr)) => {
            out.extend(balance_criteria(&tr, 1.25));
            out.extend(rate_criteria(&report));
            out.push(gbound_criterion(&report));
            out.push(k_criterion(&tr, &cfg));
        }
        Err(e) => {
            let names = ["entropy balance", "production balance", "decay rates", "u-frame rates", "weighted-norm bound", "K-functional structure"];
            for (k, name) in names.into_iter().enumerate() {
                out.push(CriterionResult { id: 3 + k as u8, name, pass: false, detail: format!("default run failed: {e}") });
            }
        }
    }
    out.push(wang_criterion(&cfg));
    out.push(blowup_criterion(&RunConfig::default()));
    out.push(cross_frame_criterion(&RunConfig::default()));
    out.push(scan_criterion(&RunConfig::default()));
    out.push(determinism_criterion(&RunConfig::default()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_oracle_matches_quoted_example() {
        assert!((entropy_of_scaled_phi1(3, 5.0, 3.0) + 233.5).abs() < 0.5);
        assert!((entropy_of_scaled_phi1(3, 5.0, 0.01) - 2.7841e-3).abs() < 1e-6);
    }
}
