//! Endpoint accuracy sweep: L² error of the sMC integrator (and Verlet, for
//! comparison) against the exact or fine-reference endpoint over a dyadic
//! step grid. The sMC error should scale like `h^{3/2}`, Verlet like `h^2`.

use super::{common_meta, Check, ExperimentConfig, ExperimentReport, ExperimentTable};
use crate::integrators::{
    exact_flow_gaussian, reference_flow, smc_step_in_place, verlet_step, IntegratorParams,
    PhasePoint, Scratch,
};
use crate::parallel::run_trials;
use crate::potentials::{Potential, PotentialModel};
use crate::randomness::make_stream;
use crate::stats::fit_loglog_slope;
use crate::Error;

/// Reference step exponent for non-Gaussian targets: Verlet at `h = 2^-16`.
const REF_EXPONENT: i32 = 16;

const SMC_SLOPE_RANGE: (f64, f64) = (1.35, 1.65);
const VERLET_SLOPE_RANGE: (f64, f64) = (1.8, 2.2);

pub fn run_accuracy_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, Error> {
    cfg.validate()?;
    if matches!(cfg.model, PotentialModel::AnisotropicGaussian { .. }) {
        return Err(Error::Config(
            "accuracy sweep supports iso:<k>[,d], double_well, rough:<a>".into(),
        ));
    }
    let (lo, hi) = cfg.n_range;
    if hi - lo + 1 < 3 {
        return Err(Error::Config(
            "accuracy sweep needs at least 3 grid points (n-range lo..hi)".into(),
        ));
    }
    let trials = cfg.effective_trials(10_000);
    let model = &cfg.model;
    let d = model.dim();
    // Initial condition (2, 1) in every coordinate, unit duration.
    let start = PhasePoint::new(vec![2.0; d], vec![1.0; d]);
    let duration = 1.0;
    let (reference, ref_desc) = if model.is_gaussian() {
        (
            exact_flow_gaussian(model, &start, duration),
            "closed-form flow".to_string(),
        )
    } else {
        (
            reference_flow(model, &start, duration, 0.5f64.powi(REF_EXPONENT)),
            format!("Verlet at h = 2^-{REF_EXPONENT}"),
        )
    };

    let mut table = ExperimentTable::new(&["h", "l2_error_smc", "l2_error_verlet", "trials"]);
    common_meta(&mut table, "accuracy", cfg, trials);
    table.meta_line(format!("duration = {duration}"));
    table.meta_line("initial = (2, 1) per coordinate");
    table.meta_line(format!("reference = {ref_desc}"));

    let mut hs = Vec::new();
    let mut smc_errs = Vec::new();
    let mut verlet_errs = Vec::new();
    for (row, n_exp) in (lo..=hi).enumerate() {
        let n = 1usize << n_exp;
        let params = IntegratorParams::from_steps(duration, n);
        let base = (row * trials) as u64;
        let sq_errors = run_trials(trials, |t| {
            let mut stream = make_stream(cfg.seed, base + t as u64);
            let mut x = start.x.clone();
            let mut v = start.v.clone();
            let mut scratch = Scratch::new(d);
            for _ in 0..n {
                let u = stream.draw_uniform(0.0, params.h);
                smc_step_in_place(model, &mut x, &mut v, params.h, u, &mut scratch);
            }
            let mut acc = 0.0;
            for j in 0..d {
                let dx = x[j] - reference.x[j];
                let dv = v[j] - reference.v[j];
                acc += dx * dx + dv * dv;
            }
            acc
        });
        let l2_smc = (sq_errors.iter().sum::<f64>() / trials as f64).sqrt();
        let mut endpoint = start.clone();
        for _ in 0..n {
            endpoint = verlet_step(model, &endpoint, params.h);
        }
        let l2_verlet = endpoint.sq_distance(&reference).sqrt();
        table.push_row(vec![params.h, l2_smc, l2_verlet, trials as f64]);
        hs.push(params.h);
        smc_errs.push(l2_smc);
        verlet_errs.push(l2_verlet);
    }

    let fit_smc = fit_loglog_slope(&hs, &smc_errs);
    let fit_verlet = fit_loglog_slope(&hs, &verlet_errs);
    table.footer_line(format!("slope_smc = {}", fit_smc.slope));
    table.footer_line(format!("slope_verlet = {}", fit_verlet.slope));

    let (s_lo, s_hi) = SMC_SLOPE_RANGE;
    let (v_lo, v_hi) = VERLET_SLOPE_RANGE;
    let mut checks = vec![Check::gate(
        "smc order 3/2",
        (s_lo..=s_hi).contains(&fit_smc.slope),
        format!("fitted slope {:.4} in [{s_lo}, {s_hi}]", fit_smc.slope),
    )];
    let verlet_detail = format!("fitted slope {:.4} in [{v_lo}, {v_hi}]", fit_verlet.slope);
    // The order-2 pin is calibrated on the Gaussian; elsewhere it is
    // reported but not gated.
    if model.is_gaussian() {
        checks.push(Check::gate(
            "verlet order 2",
            (v_lo..=v_hi).contains(&fit_verlet.slope),
            verlet_detail,
        ));
    } else {
        checks.push(Check::info("verlet order 2", verlet_detail));
    }

    Ok(ExperimentReport {
        claim: format!(
            "sMC endpoint L2 error on {} decays as h^(3/2) (slope in [{s_lo}, {s_hi}])",
            model.kind_name()
        ),
        table,
        checks,
    })
}
