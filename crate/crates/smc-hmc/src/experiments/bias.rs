//! Asymptotic-bias sweep on the 1d Gaussian: the W² distance between the
//! uHMC invariant law and the target should decay at least like `h^{3/2}`.
//!
//! Estimator: each trial runs a uHMC chain and an exact-HMC chain from the
//! same warm start with shared velocity refreshments. After burn-in the
//! exact endpoint is a perfect target draw and the uHMC endpoint sits a
//! biased-but-tiny offset away, so the empirical W² between the two endpoint
//! clouds resolves biases far below the usual `N^{-1/2}` sampling floor.
//! The residual floor is measured directly: replicated synthetic samples
//! with the target law and the observed endpoint correlation give the null
//! distribution of the raw estimate, which is subtracted in quadrature.
//! Rows whose raw estimate is inside the null band are flagged and left out
//! of the slope fit.

use super::{common_meta, Check, ExperimentConfig, ExperimentReport, ExperimentTable};
use crate::integrators::{smc_step_in_place, IntegratorParams, PhasePoint, Scratch};
use crate::parallel::run_trials;
use crate::potentials::Potential;
use crate::randomness::make_stream;
use crate::samplers::{adjusted_hmc_step, tune_uhmc, RhoKind};
use crate::stats::{empirical_w2_1d, fit_loglog_slope, gaussian_w2_diag, normal_quantile_ladder};
use crate::Error;

/// Which transition kernel the sweep measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiasSampler {
    /// Unadjusted chain; carries the `O(h^{3/2})` bias under test.
    Uhmc,
    /// Metropolis-adjusted chain; exact, so every row should sit at the
    /// noise floor.
    Adjusted,
}

impl BiasSampler {
    fn name(self) -> &'static str {
        match self {
            BiasSampler::Uhmc => "uhmc",
            BiasSampler::Adjusted => "adjusted",
        }
    }
}

/// Requested steps `2^-2 .. 2^-6`; each is rounded to an integer number of
/// strata per transition.
const DEFAULT_GRID: [f64; 5] = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
/// Null replicates behind the floor estimate and its spread.
const FLOOR_REPLICATES: usize = 8;
/// Accuracy fed to `tune_uhmc` for the burn-in length (m = 222 at K = L = 1).
const BURN_EPSILON: f64 = 0.02;
const MIN_SLOPE: f64 = 1.35;

struct BiasRow {
    h: f64,
    corrected: f64,
    raw: f64,
    floor_mean: f64,
    floor_sd: f64,
    flagged: bool,
}

pub fn run_bias_experiment(
    cfg: &ExperimentConfig,
    sampler: BiasSampler,
) -> Result<ExperimentReport, Error> {
    cfg.validate()?;
    if !(cfg.model.is_gaussian() && cfg.model.dim() == 1) {
        return Err(Error::Config(
            "bias sweep requires a one-dimensional Gaussian model".into(),
        ));
    }
    let model = &cfg.model;
    let k = model.strong_convexity().expect("gaussian");
    let l = model.gradient_lipschitz();
    let sigma = 1.0 / k.sqrt();
    let duration = 1.0 / (8.0 * l).sqrt();
    let tuning = tune_uhmc(k, l, 1, BURN_EPSILON, 1.0)?;
    let burn = ((tuning.m as f64 / cfg.relax).ceil() as usize).max(1);
    let n_samples = cfg.effective_trials(100_000);
    if n_samples < 100 {
        return Err(Error::Config(
            "bias sweep needs at least 100 samples per step".into(),
        ));
    }
    let grid = cfg.effective_h_grid(&DEFAULT_GRID);

    // Exact per-transition rotation, same expression order as the Gaussian
    // flow so replays bit-match.
    let omega = k.sqrt();
    let (sin_wt, cos_wt) = (omega * duration).sin_cos();

    let mut table = ExperimentTable::new(&[
        "h",
        "n",
        "w2_hat",
        "w2_raw",
        "noise_floor",
        "floor_sd",
        "w2_ladder",
        "ladder_floor",
        "w2_gaussian_proxy",
        "trials",
        "flagged",
    ]);
    common_meta(&mut table, "bias", cfg, n_samples);
    table.meta_line(format!("sampler = {}", sampler.name()));
    table.meta_line(format!("duration = {duration}"));
    table.meta_line(format!(
        "burn_in = {burn} (tuned m = {}, relax = {})",
        tuning.m, cfg.relax
    ));
    table.meta_line("note = grid steps are rounded to h = T/round(T/h)");

    let null_base = (grid.len() * n_samples) as u64;
    let ladder = normal_quantile_ladder(n_samples, 0.0, sigma);
    let mut rows = Vec::with_capacity(grid.len());
    for (row, h_req) in grid.iter().enumerate() {
        let n = ((duration / h_req).round() as usize).max(1);
        let params = IntegratorParams::from_steps(duration, n);
        let base = (row * n_samples) as u64;
        let pairs: Vec<(f64, f64)> = run_trials(n_samples, |t| {
            let mut stream = make_stream(cfg.seed, base + t as u64);
            let x0 = sigma * stream.draw_std_normal();
            match sampler {
                BiasSampler::Uhmc => {
                    let mut pos = [x0];
                    let mut vel = [0.0];
                    let mut xe = x0;
                    let mut scratch = Scratch::new(1);
                    for _ in 0..burn {
                        let xi = stream.draw_std_normal();
                        vel[0] = xi;
                        for _ in 0..params.n {
                            let u = stream.draw_uniform(0.0, params.h);
                            smc_step_in_place(model, &mut pos, &mut vel, params.h, u, &mut scratch);
                        }
                        xe = xe * cos_wt + xi / omega * sin_wt;
                    }
                    (pos[0], xe)
                }
                BiasSampler::Adjusted => {
                    let mut state = PhasePoint::new(vec![x0], vec![0.0]);
                    for _ in 0..burn {
                        let (next, _) = adjusted_hmc_step(
                            model,
                            &state,
                            params.h,
                            params.n,
                            RhoKind::UniformContinuous,
                            &mut stream,
                        );
                        state = next;
                    }
                    (state.x[0], x0)
                }
            }
        });
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let xes: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let raw = empirical_w2_1d(&xs, &xes);

        // Correlation-matched Gaussian null: same marginal as the target,
        // same pairwise correlation with the exact sample as observed.
        let nf = n_samples as f64;
        let mx = xs.iter().sum::<f64>() / nf;
        let me = xes.iter().sum::<f64>() / nf;
        let mut vx = 0.0;
        let mut ve = 0.0;
        let mut cov = 0.0;
        for i in 0..n_samples {
            let a = xs[i] - mx;
            let b = xes[i] - me;
            vx += a * a;
            ve += b * b;
            cov += a * b;
        }
        vx /= nf - 1.0;
        ve /= nf - 1.0;
        cov /= nf - 1.0;
        let rho = (cov / (vx.sqrt() * ve.sqrt())).clamp(-1.0, 1.0);
        let noise = sigma * (1.0 - rho * rho).max(0.0).sqrt();
        let mut floors = Vec::with_capacity(FLOOR_REPLICATES);
        for rep in 0..FLOOR_REPLICATES {
            let mut stream =
                make_stream(cfg.seed, null_base + (row * FLOOR_REPLICATES + rep) as u64);
            let ynull: Vec<f64> = xes
                .iter()
                .map(|&e| rho * e + noise * stream.draw_std_normal())
                .collect();
            floors.push(empirical_w2_1d(&ynull, &xes));
        }
        let floor_mean = floors.iter().sum::<f64>() / FLOOR_REPLICATES as f64;
        let floor_sd = (floors
            .iter()
            .map(|f| (f - floor_mean) * (f - floor_mean))
            .sum::<f64>()
            / (FLOOR_REPLICATES - 1) as f64)
            .sqrt();
        let flagged = raw <= floor_mean + 3.0 * floor_sd;
        let corrected = (raw * raw - floor_mean * floor_mean).max(0.0).sqrt();

        let w2_ladder = empirical_w2_1d(&xs, &ladder);
        let ladder_floor = empirical_w2_1d(&xes, &ladder);
        let proxy = gaussian_w2_diag(&[mx], &[vx], &[0.0], &[sigma * sigma]);

        table.push_row(vec![
            params.h,
            n as f64,
            corrected,
            raw,
            floor_mean,
            floor_sd,
            w2_ladder,
            ladder_floor,
            proxy,
            n_samples as f64,
            if flagged { 1.0 } else { 0.0 },
        ]);
        rows.push(BiasRow {
            h: params.h,
            corrected,
            raw,
            floor_mean,
            floor_sd,
            flagged,
        });
    }

    let unflagged: Vec<&BiasRow> = rows.iter().filter(|r| !r.flagged).collect();
    let mut checks = Vec::new();
    match sampler {
        BiasSampler::Uhmc => {
            let enough = unflagged.len() >= 3;
            checks.push(Check::gate(
                "rows above the noise floor",
                enough,
                format!("{} of {} rows usable", unflagged.len(), rows.len()),
            ));
            if enough {
                let hs: Vec<f64> = unflagged.iter().map(|r| r.h).collect();
                let ws: Vec<f64> = unflagged.iter().map(|r| r.corrected).collect();
                let fit = fit_loglog_slope(&hs, &ws);
                table.footer_line(format!("slope = {}", fit.slope));
                checks.push(Check::gate(
                    "bias order at least 3/2",
                    fit.slope >= MIN_SLOPE,
                    format!("fitted slope {:.4} >= {MIN_SLOPE}", fit.slope),
                ));
                let mut monotone = true;
                let mut worst = String::from("all decreasing within noise");
                for w in unflagged.windows(2) {
                    let slack = 3.0
                        * (w[0].floor_sd * w[0].floor_sd + w[1].floor_sd * w[1].floor_sd).sqrt();
                    if w[1].corrected > w[0].corrected + slack {
                        monotone = false;
                        worst = format!(
                            "w2 rose from {} (h = {}) to {} (h = {})",
                            w[0].corrected, w[0].h, w[1].corrected, w[1].h
                        );
                    }
                }
                checks.push(Check::gate("monotone trend (3 sigma)", monotone, worst));
            } else {
                table.footer_line("slope = nan".to_string());
            }
        }
        BiasSampler::Adjusted => {
            let all_flagged = rows.iter().all(|r| r.flagged);
            let worst = rows
                .iter()
                .map(|r| r.raw / (r.floor_mean + 3.0 * r.floor_sd))
                .fold(0.0f64, f64::max);
            checks.push(Check::gate(
                "exact sampler sits at the noise floor",
                all_flagged,
                format!("max raw/threshold ratio {worst:.3} (<= 1 on every row)"),
            ));
            checks.push(Check::info(
                "bias order",
                "n/a: no signal above the floor by design".to_string(),
            ));
        }
    }

    let claim = match sampler {
        BiasSampler::Uhmc => format!(
            "uHMC asymptotic W2 bias on the 1d Gaussian decays at least like h^(3/2) \
             (floor-corrected slope >= {MIN_SLOPE})"
        ),
        BiasSampler::Adjusted => {
            "the Metropolis-adjusted chain shows no bias above the measured noise floor \
             on the same step grid"
                .to_string()
        }
    };
    Ok(ExperimentReport {
        claim,
        table,
        checks,
    })
}
