//! Synchronous couplings and contraction diagnostics.
//!
//! Two copies of a chain share every random input (velocity refreshments,
//! stratum offsets, event clocks), so the gap between them evolves
//! deterministically given the draws. For strongly convex targets with
//! `L T^2 <= 1/8` the sMC flow contracts that gap almost surely by the
//! factor `1 - K T^2 / 3` per transition; the diagnostics here record the
//! distance traces that make such statements checkable.

use crate::integrators::{smc_step_in_place, IntegratorParams, PhasePoint, Scratch};
use crate::potentials::Potential;
use crate::randomness::RandomStream;

/// Per-step squared-distance ratio summary of a coupling trace.
///
/// `count` is the number of steps where the previous squared distance sat
/// above the numerical floor; `max`/`mean` are zero when nothing was
/// measurable.
#[derive(Clone, Copy, Debug)]
pub struct RatioStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

/// Distance log of a synchronous coupling.
///
/// `times` holds transition indices for chain couplings and physical event
/// times for the jump process. `distorted` is populated only by the jump
/// process (the metric the contraction statement lives in); `vel_gaps`
/// records `|v_a - v_b|` alongside the position gaps in `distances`.
#[derive(Clone, Debug)]
pub struct CouplingTrace {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub vel_gaps: Vec<f64>,
    pub distorted: Vec<f64>,
    pub ratio_stats: RatioStats,
}

/// Numerical floor below which squared distances are treated as converged.
pub const DISTANCE_FLOOR: f64 = 1e-12;

fn ratio_stats_from_sq(sq: &[f64], floor: f64) -> RatioStats {
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for w in sq.windows(2) {
        if w[0] > floor {
            let r = w[1] / w[0];
            max = max.max(r);
            sum += r;
            count += 1;
        }
    }
    RatioStats {
        max,
        mean: if count == 0 { 0.0 } else { sum / count as f64 },
        count,
    }
}

fn euclid_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Runs the sMC flow from `(x, v)` and `(y, v)` with identical stratum
/// offsets (one uniform per stratum drives both copies) and returns the two
/// endpoints. This is the coupling under which the flow contracts almost
/// surely.
pub fn coupled_smc_pair<P: Potential + ?Sized>(
    model: &P,
    x: &[f64],
    y: &[f64],
    v: &[f64],
    params: IntegratorParams,
    stream: &mut RandomStream,
) -> (PhasePoint, PhasePoint) {
    let d = model.dim();
    assert!(
        x.len() == d && y.len() == d && v.len() == d,
        "dimension mismatch"
    );
    let mut xa = x.to_vec();
    let mut va = v.to_vec();
    let mut xb = y.to_vec();
    let mut vb = v.to_vec();
    let mut sa = Scratch::new(d);
    let mut sb = Scratch::new(d);
    for _ in 0..params.n {
        let u = stream.draw_uniform(0.0, params.h);
        smc_step_in_place(model, &mut xa, &mut va, params.h, u, &mut sa);
        smc_step_in_place(model, &mut xb, &mut vb, params.h, u, &mut sb);
    }
    (PhasePoint::new(xa, va), PhasePoint::new(xb, vb))
}

/// Synchronously coupled pair of uHMC chains: both share each transition's
/// velocity refreshment and all stratum offsets. Records the position gap
/// after every transition (`times` are step indices `0..=m`).
pub fn synchronous_coupling_uhmc<P: Potential + ?Sized>(
    model: &P,
    x0: &[f64],
    y0: &[f64],
    params: IntegratorParams,
    m: usize,
    stream: &mut RandomStream,
) -> CouplingTrace {
    assert!(m >= 1, "need at least one transition");
    let d = model.dim();
    assert!(x0.len() == d && y0.len() == d, "dimension mismatch");
    let mut xa = x0.to_vec();
    let mut xb = y0.to_vec();
    let mut va = vec![0.0; d];
    let mut vb = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut sa = Scratch::new(d);
    let mut sb = Scratch::new(d);
    let mut times = Vec::with_capacity(m + 1);
    let mut distances = Vec::with_capacity(m + 1);
    let mut vel_gaps = Vec::with_capacity(m + 1);
    times.push(0.0);
    distances.push(euclid_gap(&xa, &xb));
    vel_gaps.push(0.0);
    for k in 1..=m {
        stream.fill_std_normal(&mut xi);
        va.copy_from_slice(&xi);
        vb.copy_from_slice(&xi);
        for _ in 0..params.n {
            let u = stream.draw_uniform(0.0, params.h);
            smc_step_in_place(model, &mut xa, &mut va, params.h, u, &mut sa);
            smc_step_in_place(model, &mut xb, &mut vb, params.h, u, &mut sb);
        }
        times.push(k as f64);
        distances.push(euclid_gap(&xa, &xb));
        vel_gaps.push(euclid_gap(&va, &vb));
    }
    let sq: Vec<f64> = distances.iter().map(|d| d * d).collect();
    let ratio_stats = ratio_stats_from_sq(&sq, DISTANCE_FLOOR);
    CouplingTrace {
        times,
        distances,
        vel_gaps,
        distorted: Vec::new(),
        ratio_stats,
    }
}

/// The distorted metric `rho^2(z, w) = |z|^2/4 + <z, w>/(2 lambda)
/// + |w|^2 / lambda^2` in which the jump process contracts.
pub fn distorted_metric(z: &[f64], w: &[f64], lambda: f64) -> f64 {
    assert!(lambda > 0.0, "lambda must be positive");
    assert_eq!(z.len(), w.len(), "dimension mismatch");
    let mut z2 = 0.0;
    let mut zw = 0.0;
    let mut w2 = 0.0;
    for j in 0..z.len() {
        z2 += z[j] * z[j];
        zw += z[j] * w[j];
        w2 += w[j] * w[j];
    }
    0.25 * z2 + 0.5 / lambda * zw + w2 / (lambda * lambda)
}

/// Synchronously coupled pair of randomized uHMC processes: one event clock
/// drives both copies, which share the event type and the `xi`/`u` draws.
/// Records, at every event time, the position gap, velocity gap, and the
/// distorted metric at the given `lambda`.
pub fn synchronous_coupling_mjp<P: Potential + ?Sized>(
    model: &P,
    state_a: &PhasePoint,
    state_b: &PhasePoint,
    lambda: f64,
    h: f64,
    t_end: f64,
    stream: &mut RandomStream,
) -> CouplingTrace {
    assert!(lambda > 0.0 && h > 0.0 && t_end > 0.0);
    let d = model.dim();
    assert!(
        state_a.dim() == d && state_b.dim() == d,
        "dimension mismatch"
    );
    let mean_dt = h / (lambda * h + 1.0);
    let refresh_prob = lambda * h / (1.0 + lambda * h);
    let mut xa = state_a.x.clone();
    let mut va = state_a.v.clone();
    let mut xb = state_b.x.clone();
    let mut vb = state_b.v.clone();
    let mut xi = vec![0.0; d];
    let mut sa = Scratch::new(d);
    let mut sb = Scratch::new(d);
    let diff = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(a, b)| a - b).collect() };
    let mut times = vec![0.0];
    let mut distances = vec![euclid_gap(&xa, &xb)];
    let mut vel_gaps = vec![euclid_gap(&va, &vb)];
    let mut distorted = vec![distorted_metric(&diff(&xa, &xb), &diff(&va, &vb), lambda)];
    let mut t = 0.0;
    loop {
        let dt = stream.draw_exponential(mean_dt);
        stream.fill_std_normal(&mut xi);
        let u = stream.draw_uniform(0.0, h);
        let coin = stream.unit_uniform();
        t += dt;
        if t > t_end {
            break;
        }
        if coin <= refresh_prob {
            va.copy_from_slice(&xi);
            vb.copy_from_slice(&xi);
        } else {
            smc_step_in_place(model, &mut xa, &mut va, h, u, &mut sa);
            smc_step_in_place(model, &mut xb, &mut vb, h, u, &mut sb);
        }
        times.push(t);
        distances.push(euclid_gap(&xa, &xb));
        vel_gaps.push(euclid_gap(&va, &vb));
        distorted.push(distorted_metric(&diff(&xa, &xb), &diff(&va, &vb), lambda));
    }
    let sq: Vec<f64> = distances.iter().map(|d| d * d).collect();
    let ratio_stats = ratio_stats_from_sq(&sq, DISTANCE_FLOOR);
    CouplingTrace {
        times,
        distances,
        vel_gaps,
        distorted,
        ratio_stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialModel;
    use crate::randomness::make_stream;
    use crate::stats::fit_exp_decay;
    use crate::test_support::Flat;

    fn iso1() -> PotentialModel {
        PotentialModel::isotropic(1.0, 1)
    }

    /// Tuned duration saturating L T^2 = 1/8 at L = 1.
    fn tuned_t() -> f64 {
        0.125f64.sqrt()
    }

    #[test]
    fn identical_inputs_stay_identical() {
        let m = iso1();
        let params = IntegratorParams::new(tuned_t(), tuned_t() / 4.0);
        let mut stream = make_stream(61, 0);
        let (a, b) = coupled_smc_pair(&m, &[1.5], &[1.5], &[0.3], params, &mut stream);
        assert_eq!(a, b);
        let mut stream = make_stream(61, 1);
        let trace = synchronous_coupling_uhmc(&m, &[2.0], &[2.0], params, 20, &mut stream);
        assert!(trace.distances.iter().all(|&d| d == 0.0));
        let st = PhasePoint::new(vec![1.0], vec![0.5]);
        let mut stream = make_stream(61, 2);
        let trace = synchronous_coupling_mjp(&m, &st, &st, 12.0, 1.0 / 24.0, 5.0, &mut stream);
        assert!(trace.distances.iter().all(|&d| d == 0.0));
        assert!(trace.distorted.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn free_flight_preserves_the_gap() {
        let flat = Flat(2);
        let params = IntegratorParams::new(1.0, 0.25);
        let mut stream = make_stream(62, 0);
        let (a, b) = coupled_smc_pair(
            &flat,
            &[0.0, 1.0],
            &[3.0, 5.0],
            &[1.0, -1.0],
            params,
            &mut stream,
        );
        let gap: f64 =
            a.x.iter()
                .zip(&b.x)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
        assert_eq!(gap, 5.0);
    }

    #[test]
    fn almost_sure_contraction_holds_on_every_trial() {
        // Hard bound, not a statistical one: with L T^2 = 1/8 and shared
        // draws, every (x, y, v, seed) satisfies the factor 1 - K T^2 / 3.
        let m = iso1();
        let t = tuned_t();
        let bound = 1.0 - t * t / 3.0;
        for divisor in [1usize, 2, 4] {
            let params = IntegratorParams::from_steps(t, divisor);
            for trial in 0..10_000u64 {
                let mut stream = make_stream(63, trial);
                let x = [2.0 * stream.draw_std_normal()];
                let y = [2.0 * stream.draw_std_normal()];
                let v = [stream.draw_std_normal()];
                let d0 = (x[0] - y[0]).abs();
                if d0 < 1e-12 {
                    continue;
                }
                let (a, b) = coupled_smc_pair(&m, &x, &y, &v, params, &mut stream);
                let ratio = (a.x[0] - b.x[0]) * (a.x[0] - b.x[0]) / (d0 * d0);
                assert!(
                    ratio <= bound + 1e-12,
                    "trial {trial}, n={divisor}: ratio {ratio} > {bound}"
                );
            }
        }
    }

    #[test]
    fn chain_coupling_contracts_at_the_predicted_rate() {
        let m = iso1();
        let t = tuned_t();
        let params = IntegratorParams::from_steps(t, 4);
        let m_steps = 50;
        let factor = 1.0 - t * t / 3.0;
        let seeds = 1000;
        let d0 = 3.0f64; // |2 - (-1)|
        let mut final_sq = Vec::with_capacity(seeds);
        let mut max_ratio = 0.0f64;
        for seed in 0..seeds {
            let mut stream = make_stream(64, seed as u64);
            let trace =
                synchronous_coupling_uhmc(&m, &[2.0], &[-1.0], params, m_steps, &mut stream);
            let last = *trace.distances.last().unwrap();
            final_sq.push(last * last);
            max_ratio = max_ratio.max(trace.ratio_stats.max);
        }
        // Per-step ratios never exceed the almost-sure factor.
        assert!(max_ratio <= factor + 1e-12, "max ratio {max_ratio}");
        // Mean final squared distance obeys the iterated bound with 3 sigma
        // slack (it is far below it in practice).
        let mean = final_sq.iter().sum::<f64>() / seeds as f64;
        let sd = (final_sq
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (seeds - 1) as f64)
            .sqrt();
        let bound = factor.powi(m_steps as i32) * d0 * d0;
        assert!(
            mean <= bound + 3.0 * sd / (seeds as f64).sqrt(),
            "mean {mean} vs bound {bound}"
        );
    }

    #[test]
    fn coupling_is_symmetric_in_the_pair() {
        let m = PotentialModel::anisotropic(vec![1.0, 4.0]);
        let params = IntegratorParams::new(0.25, 0.0625);
        let a = {
            let mut s = make_stream(65, 0);
            synchronous_coupling_uhmc(&m, &[2.0, 1.0], &[-1.0, 0.5], params, 30, &mut s)
        };
        let b = {
            let mut s = make_stream(65, 0);
            synchronous_coupling_uhmc(&m, &[-1.0, 0.5], &[2.0, 1.0], params, 30, &mut s)
        };
        assert_eq!(a.distances, b.distances);
        assert_eq!(a.vel_gaps, b.vel_gaps);
    }

    #[test]
    fn distorted_metric_hand_values() {
        assert_eq!(distorted_metric(&[1.0], &[0.0], 2.0), 0.25);
        assert_eq!(distorted_metric(&[0.0], &[1.0], 2.0), 0.25);
        assert_eq!(distorted_metric(&[1.0], &[1.0], 1.0), 1.75);
    }

    #[test]
    fn mjp_coupling_contracts_and_stays_metric_equivalent() {
        let m = iso1();
        let lambda: f64 = 12.0;
        let h = 1.0 / 24.0;
        let a = PhasePoint::new(vec![1.0], vec![0.5]);
        let b = PhasePoint::new(vec![-1.0], vec![-0.5]);
        let gamma = 1.0 / 120.0;
        let lo = 0.125 * (4.0 / (lambda * lambda)).min(1.0f64);
        let hi = (13.0 / 12.0 / (lambda * lambda)).max(1.0f64);
        let mut rates = Vec::new();
        for seed in 0..10u64 {
            let mut stream = make_stream(66, seed);
            let trace = synchronous_coupling_mjp(&m, &a, &b, lambda, h, 120.0, &mut stream);
            for i in 0..trace.times.len() {
                let z2 = trace.distances[i] * trace.distances[i];
                let w2 = trace.vel_gaps[i] * trace.vel_gaps[i];
                let rho2 = trace.distorted[i];
                assert!(rho2 >= lo * (z2 + w2) - 1e-12, "lower sandwich violated");
                assert!(rho2 <= hi * (z2 + w2) + 1e-12, "upper sandwich violated");
            }
            let (rate, _) = fit_exp_decay(&trace.times, &trace.distorted, DISTANCE_FLOOR)
                .expect("decay fit needs points above the floor");
            rates.push(rate);
        }
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let sd = (rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
            / (rates.len() - 1) as f64)
            .sqrt();
        let se = sd / (rates.len() as f64).sqrt();
        assert!(
            mean >= gamma - 3.0 * se,
            "fitted rate {mean} below gamma {gamma}"
        );
    }
}
