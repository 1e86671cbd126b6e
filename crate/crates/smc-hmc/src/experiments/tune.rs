//! Literal evaluation of the complexity-theorem tuning formulas, for both
//! the chain and the jump process, with internal consistency gates.

use super::{Check, ExperimentReport, ExperimentTable};
use crate::samplers::{tune_randomized, tune_uhmc};
use crate::Error;

/// Constants the tuning formulas consume.
#[derive(Clone, Copy, Debug)]
pub struct TuneInputs {
    pub k: f64,
    pub l: f64,
    pub dim: usize,
    pub epsilon: f64,
    pub w2_init: f64,
}

impl Default for TuneInputs {
    fn default() -> Self {
        TuneInputs {
            k: 1.0,
            l: 1.0,
            dim: 1,
            epsilon: 0.1,
            w2_init: 1.0,
        }
    }
}

pub fn run_tune(inputs: &TuneInputs) -> Result<ExperimentReport, Error> {
    let TuneInputs {
        k,
        l,
        dim,
        epsilon,
        w2_init,
    } = *inputs;
    let u = tune_uhmc(k, l, dim, epsilon, w2_init)?;
    let j = tune_randomized(k, l, dim, epsilon, w2_init)?;
    let grad_evals = u.m as f64 * u.n as f64;
    let jump_events = j.t_end / j.h;

    let mut table = ExperimentTable::new(&[
        "duration",
        "h",
        "n",
        "m",
        "c",
        "grad_evals",
        "lambda",
        "gamma",
        "t_end",
        "h_jump",
        "jump_events",
    ]);
    table.meta_line("experiment = tune");
    table.meta_line(format!(
        "inputs: K = {k}, L = {l}, d = {dim}, epsilon = {epsilon}, w2_init = {w2_init}"
    ));
    table.meta_line(format!("h_star = {}", u.h_star));
    table.push_row(vec![
        u.duration,
        u.h,
        u.n as f64,
        u.m as f64,
        u.c,
        grad_evals,
        j.lambda,
        j.gamma,
        j.t_end,
        j.h,
        jump_events,
    ]);

    let grid_exact = (u.n as f64 * u.h - u.duration).abs() <= 1e-12 * u.duration;
    let step_bounded = u.h <= u.h_star * (1.0 + 1e-12);

    // Doubling the accuracy target must relax every knob monotonically.
    let u2 = tune_uhmc(k, l, dim, 2.0 * epsilon, w2_init)?;
    let j2 = tune_randomized(k, l, dim, 2.0 * epsilon, w2_init)?;
    let monotone = u2.m <= u.m && u2.h_star >= u.h_star && j2.h >= j.h && j2.t_end <= j.t_end;

    let gamma_identity = (j.gamma * 10.0 * j.lambda - k).abs() <= 1e-12 * k;

    let worked_example = (k, l, dim, epsilon, w2_init) == (1.0, 1.0, 1, 0.1, 1.0);
    let example_check = if worked_example {
        Check::gate(
            "worked example",
            u.m == 144 && (u.c - 1.0 / 48.0).abs() < 1e-15,
            format!("m = {} (want 144), c = {} (want 1/48)", u.m, u.c),
        )
    } else {
        Check::info(
            "worked example",
            "run with K = L = d = 1, epsilon = 0.1, w2_init = 1 to exercise".to_string(),
        )
    };

    let checks = vec![
        Check::gate(
            "step bound and grid identity",
            step_bounded && grid_exact,
            format!("h = {} <= h* = {}, n h = T", u.h, u.h_star),
        ),
        example_check,
        Check::gate(
            "monotone in accuracy",
            monotone,
            format!(
                "2 epsilon: m {} -> {}, h* {} -> {}, h_jump {} -> {}",
                u.m, u2.m, u.h_star, u2.h_star, j.h, j2.h
            ),
        ),
        Check::gate(
            "jump rate identity",
            gamma_identity,
            format!("gamma = K / (10 lambda) = {}", j.gamma),
        ),
    ];

    Ok(ExperimentReport {
        claim: format!(
            "tuned parameters reach W2 accuracy {epsilon} from distance {w2_init}: \
             m = {} transitions at c = {:.6} per step, {} gradient evaluations",
            u.m, u.c, grad_evals
        ),
        table,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_hits_the_frozen_values() {
        let report = run_tune(&TuneInputs::default()).expect("valid");
        assert!(report.passed(), "{}", report.render());
        let row = &report.table.rows[0];
        assert_eq!(row[3], 144.0);
        assert!((row[4] - 1.0 / 48.0).abs() < 1e-15);
        assert_eq!(row[6], 12.0);
        assert!((row[7] - 1.0 / 120.0).abs() < 1e-15);
    }

    #[test]
    fn convexity_order_is_enforced() {
        let inputs = TuneInputs {
            k: 2.0,
            l: 1.0,
            ..TuneInputs::default()
        };
        assert!(run_tune(&inputs).is_err());
    }

    #[test]
    fn non_default_inputs_downgrade_the_example_check() {
        let inputs = TuneInputs {
            epsilon: 0.2,
            ..TuneInputs::default()
        };
        let report = run_tune(&inputs).expect("valid");
        assert!(report.passed(), "{}", report.render());
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "worked example" && c.passed.is_none()));
    }
}
