//! Experiment orchestration. Each submodule turns one checkable claim about
//! the samplers into a reproducible table plus PASS/FAIL checks; the CLI is
//! a thin shell around these runners.
//!
//! Reproducibility contract: a report is a pure function of (config, seed).
//! Tables carry their config in `#`-prefixed metadata lines and never embed
//! timestamps, so reruns are byte-identical.

pub mod accuracy;
pub mod adjusted;
pub mod bias;
pub mod contraction;
pub mod mjp;
pub mod sample;
pub mod tune;

use std::fmt::Write as _;
use std::path::Path;

use crate::potentials::PotentialModel;
use crate::Error;

/// Knobs shared by the experiment runners. Subcommand-specific options are
/// plain arguments on the individual `run_*` functions.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub model: PotentialModel,
    pub seed: u64,
    /// Trials / samples / steps depending on the experiment; `None` picks
    /// that experiment's documented default.
    pub trials: Option<usize>,
    /// Step grid for the bias and jump sweeps; empty means the default grid.
    /// Stored largest-first.
    pub h_grid: Vec<f64>,
    /// Inclusive dyadic range `h = 2^-n` for the accuracy sweep.
    pub n_range: (u32, u32),
    /// Divides trial counts by 10 for quick runs.
    pub quick: bool,
    /// Scales impractically conservative tuned parameters (burn-in lengths,
    /// theory step bounds) toward usable values; 1 means literal.
    pub relax: f64,
}

impl ExperimentConfig {
    pub fn new(model: PotentialModel, seed: u64) -> Self {
        ExperimentConfig {
            model,
            seed,
            trials: None,
            h_grid: Vec::new(),
            n_range: (2, 10),
            quick: false,
            relax: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.trials == Some(0) {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if self.h_grid.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Config("step grid entries must be positive".into()));
        }
        if self.h_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "step grid must be strictly decreasing".into(),
            ));
        }
        if self.n_range.0 > self.n_range.1 || self.n_range.1 > 26 {
            return Err(Error::Config(format!(
                "bad dyadic range {}..{} (need lo <= hi <= 26)",
                self.n_range.0, self.n_range.1
            )));
        }
        if !(self.relax >= 1.0 && self.relax.is_finite()) {
            return Err(Error::Config(format!(
                "relax factor must be >= 1, got {}",
                self.relax
            )));
        }
        Ok(())
    }

    /// Trial count after defaults and the `--quick` divisor.
    pub fn effective_trials(&self, default: usize) -> usize {
        let t = self.trials.unwrap_or(default);
        if self.quick {
            (t / 10).max(1)
        } else {
            t
        }
    }

    /// Step grid after defaults (given largest-first).
    pub fn effective_h_grid(&self, default: &[f64]) -> Vec<f64> {
        if self.h_grid.is_empty() {
            default.to_vec()
        } else {
            self.h_grid.clone()
        }
    }
}

/// A numeric table with `#`-prefixed context lines before the header and
/// summary lines after the data.
#[derive(Clone, Debug, Default)]
pub struct ExperimentTable {
    pub meta: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub footer: Vec<String>,
}

impl ExperimentTable {
    pub fn new(header: &[&str]) -> Self {
        ExperimentTable {
            meta: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn meta_line(&mut self, line: impl Into<String>) {
        self.meta.push(line.into());
    }

    pub fn footer_line(&mut self, line: impl Into<String>) {
        self.footer.push(line.into());
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row arity mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in &self.meta {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        for line in &self.footer {
            let _ = writeln!(out, "# {line}");
        }
        out
    }

    /// Writes the CSV atomically: a sibling temp file is renamed over the
    /// target, so readers never observe a half-written table.
    pub fn write_csv(&self, path: &Path) -> Result<(), Error> {
        let tmp = path.with_extension("csv.tmp");
        std::fs::write(&tmp, self.to_csv())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// One named pass/fail (or informational) line of a report.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    /// `None` marks an informational line that does not gate the exit code.
    pub passed: Option<bool>,
    pub detail: String,
}

impl Check {
    pub fn gate(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed: Some(passed),
            detail: detail.into(),
        }
    }

    pub fn info(name: &str, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed: None,
            detail: detail.into(),
        }
    }
}

/// What a runner hands back to the CLI: the claim under test, a table, and
/// the checks whose conjunction decides the exit code.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub claim: String,
    pub table: ExperimentTable,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    /// True when no gating check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    /// Human-readable claim / check / result block.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "claim: {}", self.claim);
        for c in &self.checks {
            let status = match c.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "info",
            };
            let _ = writeln!(out, "check {}: {status}  ({})", c.name, c.detail);
        }
        let _ = writeln!(
            out,
            "result: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        out
    }
}

/// Standard metadata block: experiment name, model, seed, trial count.
fn common_meta(table: &mut ExperimentTable, name: &str, cfg: &ExperimentConfig, trials: usize) {
    table.meta_line(format!("experiment = {name}"));
    table.meta_line(format!("model = {}", cfg.model));
    table.meta_line(format!("seed = {}", cfg.seed));
    table.meta_line(format!("trials = {trials}"));
}

/// Mean and standard error of a slice (plain i.i.d. formula).
fn mean_se(xs: &[f64]) -> (f64, f64) {
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trips_and_checks_arity() {
        let mut t = ExperimentTable::new(&["h", "err"]);
        t.meta_line("experiment = demo");
        t.push_row(vec![0.25, 1.5e-3]);
        t.footer_line("slope = 1.5");
        let csv = t.to_csv();
        assert_eq!(
            csv,
            "# experiment = demo\nh,err\n0.25,0.0015\n# slope = 1.5\n"
        );
    }

    #[test]
    #[should_panic(expected = "arity")]
    fn short_rows_are_rejected() {
        let mut t = ExperimentTable::new(&["a", "b"]);
        t.push_row(vec![1.0]);
    }

    #[test]
    fn config_validation_rejects_bad_grids() {
        let model = PotentialModel::isotropic(1.0, 1);
        let mut cfg = ExperimentConfig::new(model.clone(), 0);
        assert!(cfg.validate().is_ok());
        cfg.h_grid = vec![0.25, 0.25];
        assert!(cfg.validate().is_err());
        cfg.h_grid = vec![0.125, 0.25];
        assert!(cfg.validate().is_err());
        cfg.h_grid = vec![0.25, -0.125];
        assert!(cfg.validate().is_err());
        cfg.h_grid = vec![0.25, 0.125];
        assert!(cfg.validate().is_ok());
        cfg.relax = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn quick_divides_trials() {
        let model = PotentialModel::isotropic(1.0, 1);
        let mut cfg = ExperimentConfig::new(model, 0);
        assert_eq!(cfg.effective_trials(10_000), 10_000);
        cfg.quick = true;
        assert_eq!(cfg.effective_trials(10_000), 1_000);
        cfg.trials = Some(5);
        assert_eq!(cfg.effective_trials(10_000), 1);
    }

    #[test]
    fn report_gates_on_failed_checks_only() {
        let r = ExperimentReport {
            claim: "demo".into(),
            table: ExperimentTable::new(&["x"]),
            checks: vec![Check::gate("a", true, "ok"), Check::info("b", "ignored")],
        };
        assert!(r.passed());
        let mut r = r;
        r.checks.push(Check::gate("c", false, "bad"));
        assert!(!r.passed());
        assert!(r.render().contains("result: FAIL"));
    }
}
