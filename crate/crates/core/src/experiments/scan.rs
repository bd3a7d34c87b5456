//! Fujita phase scan over exponent and amplitude.

use serde::Serialize;

use crate::config::RunConfig;
use crate::constants::{classify_regime, Regime};
use crate::dynamics::{run, RunStatus};
use crate::parallel::{map_ordered, Execution};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub p: f64,
    pub amplitude: f64,
    /// `None` when the cell's run failed; see `reason`.
    pub status: Option<RunStatus>,
    pub reason: String,
}

impl PhaseCell {
    pub fn label(&self) -> &'static str {
        self.status.as_ref().map_or("failed", RunStatus::label)
    }

    pub fn is_decayed(&self) -> bool {
        self.status == Some(RunStatus::Decayed)
    }

    pub fn is_blown_up(&self) -> bool {
        matches!(self.status, Some(RunStatus::BlewUp { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTable {
    pub dim: u32,
    pub p_values: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub p_star: f64,
    /// Row-major: `cells[i][j]` is `(p_values[i], amplitudes[j])`.
    pub cells: Vec<Vec<PhaseCell>>,
}

impl PhaseTable {
    pub fn cell(&self, p: f64, amplitude: f64) -> Option<&PhaseCell> {
        let i = self.p_values.iter().position(|&x| x == p)?;
        let j = self.amplitudes.iter().position(|&x| x == amplitude)?;
        Some(&self.cells[i][j])
    }

    /// Rows at or below the Fujita exponent that contain a decayed cell.
    pub fn fujita_violations(&self) -> Vec<&PhaseCell> {
        self.cells
            .iter()
            .flatten()
            .filter(|c| classify_regime(self.dim, c.p) != Regime::Supercritical && c.is_decayed())
            .collect()
    }

    /// Pairs `(A1 < A2)` in a supercritical row where `A1` blew up and `A2` did not.
    pub fn monotonicity_violations(&self) -> Vec<(&PhaseCell, &PhaseCell)> {
        let mut out = Vec::new();
        for row in &self.cells {
            if classify_regime(self.dim, row[0].p) != Regime::Supercritical {
                continue;
            }
            for (j, lo) in row.iter().enumerate() {
                if lo.is_blown_up() {
                    out.extend(row[j + 1..].iter().filter(|hi| !hi.is_blown_up()).map(|hi| (lo, hi)));
                }
            }
        }
        out
    }

    /// CSV with columns `p, A, outcome, t_blowup_estimate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,A,outcome,t_blowup_estimate\n");
        for c in self.cells.iter().flatten() {
            let tb = c.status.and_then(|s| s.t_blowup()).map_or(String::new(), |t| format!("{t:.16e}"));
            out.push_str(&format!("{:.16e},{:.16e},{},{}\n", c.p, c.amplitude, c.label(), tb));
        }
        out
    }

    /// Fixed-width text rendering; undetermined cells are shown as `?`.
    pub fn render(&self) -> String {
        let mut out = format!("{:>10}", "p \\ A");
        for a in &self.amplitudes {
            out.push_str(&format!("{a:>10.4}"));
        }
        out.push('\n');
        let mut marked = false;
        for row in &self.cells {
            let p = row[0].p;
            if !marked && p > self.p_star + 1e-12 {
                out.push_str(&format!("{:-^1$}\n", format!(" p* = {:.4} ", self.p_star), 10 * (1 + self.amplitudes.len())));
                marked = true;
            }
            out.push_str(&format!("{p:>10.4}"));
            for c in row {
                let sym = match c.status {
                    Some(RunStatus::Decayed) => "decay",
                    Some(RunStatus::BlewUp { .. }) => "BLOWUP",
                    Some(RunStatus::Undetermined) => "?",
                    None => "fail",
                };
                out.push_str(&format!("{sym:>10}"));
            }
            out.push('\n');
        }
        out
    }
}

fn run_cell(cfg: &RunConfig, p: f64, amplitude: f64) -> PhaseCell {
    let mut cell_cfg = cfg.clone();
    cell_cfg.problem.p = p;
    cell_cfg.problem.init = cfg.problem.init.with_amplitude(amplitude);
    let result = cell_cfg.build_grid().and_then(|grid| {
        let problem = cell_cfg.problem(&grid)?;
        run(&problem, cell_cfg.stepping.frame, &cell_cfg.controls()).map(|(tr, _)| tr.outcome)
    });
    match result {
        Ok(outcome) => PhaseCell { p, amplitude, status: Some(outcome.status), reason: outcome.reason },
        Err(e) => PhaseCell { p, amplitude, status: None, reason: e.to_string() },
    }
}

/// One evolution per `(p, A)` cell using the data family of `cfg.problem.init`.
pub fn run_fujita_scan(p_list: &[f64], amplitudes: &[f64], cfg: &RunConfig, mode: Execution) -> PhaseTable {
    let tasks: Vec<(f64, f64)> = p_list.iter().flat_map(|&p| amplitudes.iter().map(move |&a| (p, a))).collect();
    let flat = map_ordered(&tasks, mode, |&(p, a)| run_cell(cfg, p, a));
    let cells = if amplitudes.is_empty() {
        Vec::new()
    } else {
        flat.chunks(amplitudes.len()).map(<[PhaseCell]>::to_vec).collect()
    };
    let dim = cfg.problem.dim;
    PhaseTable {
        dim,
        p_values: p_list.to_vec(),
        amplitudes: amplitudes.to_vec(),
        p_star: 1.0 + 2.0 / f64::from(dim),
        cells,
    }
}

/// Evenly spaced values from `lo:hi:n`.
pub fn parse_range(text: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else { return None };
    let (lo, hi, n): (f64, f64, usize) = (lo.parse().ok()?, hi.parse().ok()?, n.parse().ok()?);
    match n {
        0 => None,
        1 => Some(vec![lo]),
        _ => Some((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_range("0.5:9:1").unwrap(), vec![0.5]);
        assert!(parse_range("1:2").is_none());
        assert!(parse_range("1:2:0").is_none());
    }

    #[test]
    fn small_scan_is_order_independent() {
        let mut cfg = RunConfig::default();
        cfg.grid.nodes = 128;
        cfg.stepping.dt = 2e-2;
        cfg.stepping.horizon = 3.0;
        let ps = [1.5, 5.0];
        let amps = [0.05, 3.0];
        let serial = run_fujita_scan(&ps, &amps, &cfg, Execution::Serial);
        let par = run_fujita_scan(&ps, &amps, &cfg, Execution::Parallel);
        assert_eq!(serial, par);
        assert_eq!(serial.to_csv(), par.to_csv());
        assert!(serial.cell(5.0, 3.0).unwrap().is_blown_up());
        assert!(serial.fujita_violations().is_empty());
        assert!(serial.monotonicity_violations().is_empty());
        assert!(serial.render().contains("p* = 1.6667"));
    }
}
