//! CSV and JSON rendering of runs, and file writing with path context.

use std::path::Path;

use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::constants::DerivedConstants;
use crate::diagnostics::{fit_log_slope, Abscissa, DiagnosticsSample};
use crate::dynamics::{run, Trajectory, WangReport};
use crate::error::{Error, Result};
use crate::experiments::decay::default_window;

pub const CSV_HEADER: &str =
    "s,t,E,I,K,R,g,dirichlet,norm_l2rho_v,norm_l2_u,norm_l4_u,sup_v,wang_margin,gbound_margin";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

pub fn csv_row(x: &DiagnosticsSample) -> String {
    let f = &x.functionals;
    [
        num(x.s),
        num(x.t),
        num(f.entropy),
        num(f.production),
        num(f.k),
        num(f.r),
        num(f.g),
        num(f.dirichlet),
        num(x.norm_l2rho_v),
        num(x.norm_l2_u),
        num(x.norm_l4_u),
        num(x.sup_v),
        opt(x.wang_margin),
        opt(x.gbound_margin),
    ]
    .join(",")
}

/// One row per recorded sample; the initial state is reported in the JSON summary.
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::with_capacity(256 * (trajectory.samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for x in &trajectory.samples {
        out.push_str(&csv_row(x));
        out.push('\n');
    }
    out
}

/// `{"config": ..., "config_toml": ...}` entries shared by every summary.
pub fn config_echo(cfg: &RunConfig) -> Value {
    json!({ "config": cfg, "config_toml": cfg.to_toml() })
}

/// Merges the config echo into a JSON object.
pub fn with_echo(cfg: &RunConfig, mut body: Value) -> Value {
    if let (Value::Object(map), Value::Object(echo)) = (&mut body, config_echo(cfg)) {
        map.extend(echo);
    }
    body
}

pub fn to_json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Summary of an evolve run: constants, outcome, default-window fits and config echo.
pub fn evolve_summary(
    cfg: &RunConfig,
    constants: &DerivedConstants,
    trajectory: &Trajectory,
    wang: Option<&WangReport>,
) -> Value {
    let window = cfg.fit_window().unwrap_or_else(|| default_window(cfg, constants.s1.ok()));
    let fit = |name: &str, f: fn(&DiagnosticsSample) -> f64| match fit_log_slope(&trajectory.series(f), window, Abscissa::S, name) {
        Ok(fit) => serde_json::to_value(fit).expect("fit serializes"),
        Err(e) => json!({ "quantity": name, "error": e.to_string() }),
    };
    let body = json!({
        "constants": constants.to_json(),
        "outcome": trajectory.outcome,
        "frame": trajectory.frame,
        "steps": trajectory.steps,
        "samples": trajectory.samples.len(),
        "dt_final": trajectory.dt_final,
        "dt_halvings": trajectory.dt_halvings,
        "max_clip_depth": trajectory.max_clip_depth,
        "initial": trajectory.initial,
        "wang_initial": wang,
        "fits": [
            fit("norm_l2rho_v", |x| x.norm_l2rho_v),
            fit("E", |x| x.functionals.entropy),
            fit("I", |x| x.functionals.production),
        ],
    });
    with_echo(cfg, body)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedRun {
    pub csv: String,
    pub json: String,
}

/// Runs `cfg` as a single evolution and renders both outputs.
pub fn render_evolve(cfg: &RunConfig) -> Result<(Trajectory, RenderedRun)> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let problem = cfg.problem(&grid)?;
    let (trajectory, wang) = run(&problem, cfg.stepping.frame, &cfg.controls())?;
    let json = to_json_text(&evolve_summary(cfg, &problem.constants, &trajectory, wang.as_ref()));
    let csv = trajectory_csv(&trajectory);
    Ok((trajectory, RenderedRun { csv, json }))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

/// Writes the rendered outputs to the paths named in the config.
pub fn write_run(cfg: &RunConfig, rendered: &RenderedRun) -> Result<()> {
    if let Some(path) = cfg.csv_path() {
        write_text(&path, &rendered.csv)?;
    }
    if let Some(path) = cfg.json_path() {
        write_text(&path, &rendered.json)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.grid.nodes = 128;
        cfg.stepping.dt = 1e-2;
        cfg.stepping.sample_every = 10;
        cfg
    }

    #[test]
    fn csv_shape() {
        let (tr, out) = render_evolve(&quick()).unwrap();
        let lines: Vec<&str> = out.csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        // 800 steps / 10
        assert_eq!(lines.len() - 1, 80);
        assert_eq!(tr.samples.len(), 80);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 14));
    }

    #[test]
    fn json_echo_reparses() {
        let cfg = quick();
        let (_, out) = render_evolve(&cfg).unwrap();
        let v: Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(v["constants"]["gamma"], 1.25);
        let echoed = crate::config::parse_config(v["config_toml"].as_str().unwrap()).unwrap();
        assert_eq!(echoed, cfg);
        let (_, again) = render_evolve(&echoed).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn io_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_text(&blocker.join("sub/out.csv"), "data").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("file"));
    }
}
