//! Plain sampling runs: a tuned uHMC chain, its kept positions as rows, and
//! a second-moment sanity gate from strong convexity (`E|X|^2 <= d/K`).

use super::{common_meta, Check, ExperimentConfig, ExperimentReport, ExperimentTable};
use crate::integrators::IntegratorParams;
use crate::potentials::Potential;
use crate::randomness::make_stream;
use crate::samplers::{tune_uhmc, uhmc_chain};
use crate::stats::{batch_means, sample_moments};
use crate::Error;

/// Slack on the second-moment envelope: the chain's own bias plus the
/// envelope being an inequality.
const MOMENT_SLACK: f64 = 1.1;

pub fn run_sample(cfg: &ExperimentConfig, epsilon: f64) -> Result<ExperimentReport, Error> {
    cfg.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!(
            "accuracy must be positive, got {epsilon}"
        )));
    }
    let model = &cfg.model;
    let Some(k) = model.strong_convexity() else {
        return Err(Error::Config(
            "sampling defaults need a strongly convex model; double_well has no tuned K".into(),
        ));
    };
    let l = model.gradient_lipschitz();
    let d = model.dim();
    let tuning = tune_uhmc(k, l, d, epsilon, 1.0)?;
    // relax > 1 widens the literal (very conservative) tuned step.
    let n = ((tuning.duration / (tuning.h_star * cfg.relax)).ceil() as usize).max(1);
    let params = IntegratorParams::from_steps(tuning.duration, n);
    let burn = tuning.m as usize;
    let keep = cfg.effective_trials(10_000);
    if keep < 4 {
        return Err(Error::Config("need at least 4 kept samples".into()));
    }

    let mut stream = make_stream(cfg.seed, 0);
    let record = uhmc_chain(model, &vec![0.0; d], params, burn + keep, &mut stream);
    let kept = &record.positions[burn + 1..];

    let mut header: Vec<String> = vec!["step".to_string()];
    for j in 0..d {
        header.push(format!("x{j}"));
    }
    let mut table = ExperimentTable {
        meta: Vec::new(),
        header,
        rows: Vec::new(),
        footer: Vec::new(),
    };
    common_meta(&mut table, "sample", cfg, keep);
    table.meta_line(format!("epsilon = {epsilon}"));
    table.meta_line(format!(
        "duration = {}, h = {}, n = {n}, burn_in = {burn}",
        params.duration, params.h
    ));
    for (i, x) in kept.iter().enumerate() {
        let mut row = Vec::with_capacity(1 + d);
        row.push((burn + 1 + i) as f64);
        row.extend_from_slice(x);
        table.push_row(row);
    }

    let (mean, var) = sample_moments(kept);
    let sq: Vec<f64> = kept
        .iter()
        .map(|x| x.iter().map(|c| c * c).sum::<f64>())
        .collect();
    let batches = (keep / 2).clamp(2, 200);
    let (m2, m2_se) = batch_means(&sq, batches);
    let bound = d as f64 / k;
    table.footer_line(format!("mean = {mean:?}"));
    table.footer_line(format!("var = {var:?}"));
    table.footer_line(format!("second_moment = {m2}"));
    table.footer_line(format!("second_moment_se = {m2_se}"));
    table.footer_line(format!("envelope = {bound}"));

    let checks = vec![
        Check::gate(
            "second-moment envelope",
            m2 <= MOMENT_SLACK * bound + 3.0 * m2_se,
            format!(
                "E|X|^2 = {m2:.4} <= {MOMENT_SLACK} x d/K = {:.4} (3 sigma = {:.4})",
                MOMENT_SLACK * bound,
                3.0 * m2_se
            ),
        ),
        Check::info(
            "moments",
            format!("per-coordinate mean {mean:?}, variance {var:?}"),
        ),
    ];

    Ok(ExperimentReport {
        claim: format!(
            "tuned uHMC samples from {} respect the strongly convex envelope E|X|^2 <= d/K = {bound}",
            model.kind_name()
        ),
        table,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialModel;

    #[test]
    fn two_dimensional_gaussian_respects_the_envelope() {
        let mut cfg = ExperimentConfig::new(PotentialModel::isotropic(1.0, 2), 37);
        cfg.trials = Some(2_000);
        cfg.relax = 50.0;
        let report = run_sample(&cfg, 0.1).expect("valid");
        assert!(report.passed(), "{}", report.render());
        assert_eq!(report.table.rows.len(), 2_000);
        assert_eq!(report.table.header.len(), 3);
    }

    #[test]
    fn rough_well_works_and_double_well_is_rejected() {
        let mut cfg = ExperimentConfig::new(PotentialModel::rough(0.5), 37);
        cfg.trials = Some(1_000);
        cfg.relax = 50.0;
        assert!(run_sample(&cfg, 0.1).expect("valid").passed());
        cfg.model = PotentialModel::DoubleWell;
        assert!(run_sample(&cfg, 0.1).is_err());
    }

    #[test]
    fn bad_epsilon_is_rejected() {
        let cfg = ExperimentConfig::new(PotentialModel::isotropic(1.0, 1), 0);
        assert!(run_sample(&cfg, 0.0).is_err());
    }
}
