//! Contraction diagnostics at two levels: the almost-sure per-flow bound
//! `1 - K T^2 / 3` on squared distances (hard, per trial), and the chain
//! decay rate `c = K T^2 / 6` of the synchronously coupled uHMC pair.

use super::{common_meta, mean_se, Check, ExperimentConfig, ExperimentReport, ExperimentTable};
use crate::coupling::{coupled_smc_pair, synchronous_coupling_uhmc, DISTANCE_FLOOR};
use crate::integrators::IntegratorParams;
use crate::parallel::run_trials;
use crate::potentials::Potential;
use crate::randomness::make_stream;
use crate::stats::fit_exp_decay;
use crate::Error;

/// Transitions run per coupled chain.
const CHAIN_STEPS: usize = 50;
/// Strata per transition in the chain part.
const CHAIN_STRATA: usize = 4;
/// Slack on the hard almost-sure bound (pure rounding).
const HARD_SLACK: f64 = 1e-12;

pub fn run_contraction_experiment(
    cfg: &ExperimentConfig,
    duration_override: Option<f64>,
) -> Result<ExperimentReport, Error> {
    cfg.validate()?;
    if !cfg.model.is_gaussian() {
        return Err(Error::Config(
            "contraction experiment requires a Gaussian model".into(),
        ));
    }
    let model = &cfg.model;
    let d = model.dim();
    let k = model.strong_convexity().expect("gaussian");
    let l = model.gradient_lipschitz();
    let duration = match duration_override {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => {
            return Err(Error::Config(format!("duration must be positive, got {t}")));
        }
        None => 1.0 / (8.0 * l).sqrt(),
    };
    let lt2 = l * duration * duration;
    let within_regime = lt2 <= 0.125 + HARD_SLACK;
    let flow_bound = 1.0 - k * duration * duration / 3.0;
    let c = k * duration * duration / 6.0;

    let trials = cfg.effective_trials(10_000);
    let seeds = (trials / 10).max(100);

    // Part A: single-flow coupling from random starts, one shared velocity.
    let divisors = [1usize, 2, 4];
    let mut max_ratio = 0.0f64;
    let mut violations = 0usize;
    for (di, divisor) in divisors.iter().enumerate() {
        let params = IntegratorParams::from_steps(duration, *divisor);
        let base = (di * trials) as u64;
        let ratios = run_trials(trials, |t| {
            let mut stream = make_stream(cfg.seed, base + t as u64);
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            let mut v = vec![0.0; d];
            for xj in x.iter_mut() {
                *xj = 2.0 * stream.draw_std_normal();
            }
            for yj in y.iter_mut() {
                *yj = 2.0 * stream.draw_std_normal();
            }
            stream.fill_std_normal(&mut v);
            let d0sq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            if d0sq < DISTANCE_FLOOR {
                return 0.0;
            }
            let (pa, pb) = coupled_smc_pair(model, &x, &y, &v, params, &mut stream);
            let end_sq: f64 = pa.x.iter().zip(&pb.x).map(|(a, b)| (a - b) * (a - b)).sum();
            end_sq / d0sq
        });
        for r in ratios {
            max_ratio = max_ratio.max(r);
            if r > flow_bound + HARD_SLACK {
                violations += 1;
            }
        }
    }

    // Part B: coupled chains; rows log every (seed, step, distance).
    let params = IntegratorParams::from_steps(duration, CHAIN_STRATA);
    let x0 = vec![2.0; d];
    let y0 = vec![-1.0; d];
    let chain_base = (divisors.len() * trials) as u64;
    let traces = run_trials(seeds, |s| {
        let mut stream = make_stream(cfg.seed, chain_base + s as u64);
        synchronous_coupling_uhmc(model, &x0, &y0, params, CHAIN_STEPS, &mut stream)
    });

    let mut table = ExperimentTable::new(&["trial", "step", "distance"]);
    common_meta(&mut table, "contraction", cfg, trials);
    table.meta_line(format!("duration = {duration}"));
    table.meta_line(format!("l_t_squared = {lt2}"));
    table.meta_line(format!("chain_seeds = {seeds}"));
    table.meta_line(format!("chain_steps = {CHAIN_STEPS}"));
    if !within_regime {
        table.meta_line(format!(
            "warning: L T^2 = {lt2} > 1/8; contraction bounds are not guaranteed"
        ));
    }

    let mut mean_sq = vec![0.0f64; CHAIN_STEPS + 1];
    let mut chain_max_ratio = 0.0f64;
    let mut per_seed_factors = Vec::with_capacity(seeds);
    for (s, trace) in traces.iter().enumerate() {
        for (step, dist) in trace.distances.iter().enumerate() {
            table.push_row(vec![s as f64, step as f64, *dist]);
            mean_sq[step] += dist * dist;
        }
        chain_max_ratio = chain_max_ratio.max(trace.ratio_stats.max);
        let times: Vec<f64> = (0..trace.distances.len()).map(|i| i as f64).collect();
        let sq: Vec<f64> = trace.distances.iter().map(|d| d * d).collect();
        if let Some((rate, _)) = fit_exp_decay(&times, &sq, DISTANCE_FLOOR) {
            // Squared distance decays at `rate` per step, so the distance
            // shrinks by exp(-rate/2).
            per_seed_factors.push((-rate / 2.0).exp());
        }
    }
    for m in mean_sq.iter_mut() {
        *m /= seeds as f64;
    }
    let steps: Vec<f64> = (0..=CHAIN_STEPS).map(|i| i as f64).collect();
    let rms_factor =
        fit_exp_decay(&steps, &mean_sq, DISTANCE_FLOOR).map(|(rate, _)| (-rate / 2.0).exp());
    let (factor_mean, factor_se) = mean_se(&per_seed_factors);
    let theorem_factor = 1.0 - c;

    table.footer_line(format!("flow_max_squared_ratio = {max_ratio}"));
    table.footer_line(format!("flow_bound = {flow_bound}"));
    table.footer_line(format!(
        "chain_rms_factor = {}",
        rms_factor.map_or("nan".to_string(), |f| f.to_string())
    ));
    table.footer_line(format!("chain_factor_mean = {factor_mean}"));
    table.footer_line(format!("chain_factor_se = {factor_se}"));
    table.footer_line(format!("theorem_factor = {theorem_factor}"));

    let flow_detail = format!(
        "max squared ratio {max_ratio:.6} vs bound {flow_bound:.6} over {} trials",
        divisors.len() * trials
    );
    let chain_detail = format!(
        "rms per-step factor {} (per-seed {factor_mean:.5} +- {factor_se:.5}) vs 1 - c = {theorem_factor:.5}",
        rms_factor.map_or("nan".to_string(), |f| format!("{f:.5}"))
    );
    let checks = if within_regime {
        vec![
            Check::gate(
                "almost-sure flow bound",
                violations == 0,
                format!("{flow_detail}; violations = {violations}"),
            ),
            Check::gate(
                "chain decay rate",
                rms_factor.is_some_and(|f| f <= theorem_factor + 3.0 * factor_se)
                    && chain_max_ratio <= flow_bound + HARD_SLACK,
                format!("{chain_detail}; max per-step squared ratio {chain_max_ratio:.6}"),
            ),
        ]
    } else {
        vec![
            Check::info(
                "almost-sure flow bound",
                format!("L T^2 = {lt2:.4} > 1/8, bound not guaranteed; {flow_detail}"),
            ),
            Check::info("chain decay rate", chain_detail),
        ]
    };

    Ok(ExperimentReport {
        claim: format!(
            "synchronously coupled sMC flows contract a.s. by 1 - K T^2/3 = {flow_bound:.5} \
             and the uHMC chain decays at c = K T^2/6 = {c:.5} per step"
        ),
        table,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialModel;

    fn quick_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(PotentialModel::isotropic(1.0, 1), 17);
        cfg.trials = Some(2000);
        cfg
    }

    #[test]
    fn tuned_duration_passes_both_levels() {
        let report = run_contraction_experiment(&quick_cfg(), None).expect("valid");
        assert!(report.passed(), "{}", report.render());
        // 200 seeds x 51 logged steps.
        assert_eq!(report.table.rows.len(), 200 * 51);
    }

    #[test]
    fn oversized_duration_downgrades_to_warning() {
        let report = run_contraction_experiment(&quick_cfg(), Some(2.0)).expect("valid");
        assert!(report.checks.iter().all(|c| c.passed.is_none()));
        assert!(report
            .table
            .meta
            .iter()
            .any(|l| l.contains("not guaranteed")));
        assert!(report.passed());
    }

    #[test]
    fn non_gaussian_models_are_rejected() {
        let mut cfg = quick_cfg();
        cfg.model = PotentialModel::DoubleWell;
        assert!(run_contraction_experiment(&cfg, None).is_err());
    }
}
