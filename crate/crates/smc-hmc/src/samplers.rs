//! Markov chains and processes built on the integrators.
//!
//! * [`uhmc_step`]/[`uhmc_chain`]: unadjusted HMC with sMC integration and
//!   complete velocity refreshment each transition.
//! * [`exact_hmc_step`]: the `h -> 0` limit chain on Gaussian targets.
//! * [`adjusted_hmc_step`]: Metropolis-adjusted HMC whose proposal chains
//!   two-stage steps with freshly randomized coefficients, making the
//!   proposal reversible up to a velocity flip and hence adjustable.
//! * [`randomized_uhmc_run`]: uHMC with exponential durations, simulated as
//!   a Markov jump process alternating velocity refreshments and single sMC
//!   steps.
//! * [`tune_uhmc`]/[`tune_randomized`]: the complexity-theorem parameter
//!   choices, implemented literally (the constants are theory-driven and
//!   pessimistic at desk scale; experiment drivers expose a relax factor).

use crate::integrators::{
    exact_flow_gaussian, hamiltonian, smc_step_in_place, two_stage_in_place, IntegratorParams,
    PhasePoint, Scratch,
};
use crate::potentials::{Potential, PotentialModel};
use crate::randomness::RandomStream;
use crate::Error;

/// Positions `X^0..X^m` of a uHMC chain.
#[derive(Clone, Debug)]
pub struct ChainRecord {
    pub positions: Vec<Vec<f64>>,
}

/// Which of the two jump-process moves an event applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Refresh,
    Integrate,
}

/// One event of the randomized uHMC jump process.
#[derive(Clone, Debug)]
pub struct JumpEvent {
    pub time: f64,
    pub state: PhasePoint,
    pub kind: EventKind,
}

/// Event log of one randomized uHMC path; the initial state at time zero is
/// the caller's `state0` and is not repeated here.
#[derive(Clone, Debug, Default)]
pub struct JumpPath {
    pub events: Vec<JumpEvent>,
}

impl JumpPath {
    pub fn refresh_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Refresh)
            .count()
    }

    pub fn integrate_count(&self) -> usize {
        self.events.len() - self.refresh_count()
    }
}

/// One uHMC transition: refresh the velocity with `xi ~ N(0, I_d)`, run the
/// sMC flow for duration `T = n h`, return the endpoint position. The
/// incoming velocity never enters; refreshment is complete by construction.
pub fn uhmc_step<P: Potential + ?Sized>(
    model: &P,
    x: &[f64],
    params: IntegratorParams,
    stream: &mut RandomStream,
) -> Vec<f64> {
    assert_eq!(x.len(), model.dim(), "dimension mismatch");
    let mut q = x.to_vec();
    let mut v = vec![0.0; x.len()];
    stream.fill_std_normal(&mut v);
    let mut s = Scratch::new(x.len());
    for _ in 0..params.n {
        let u = stream.draw_uniform(0.0, params.h);
        smc_step_in_place(model, &mut q, &mut v, params.h, u, &mut s);
    }
    q
}

/// Iterates [`uhmc_step`] `m` times; the record keeps all `m + 1` positions.
pub fn uhmc_chain<P: Potential + ?Sized>(
    model: &P,
    x0: &[f64],
    params: IntegratorParams,
    m: usize,
    stream: &mut RandomStream,
) -> ChainRecord {
    let mut positions = Vec::with_capacity(m + 1);
    positions.push(x0.to_vec());
    let mut x = x0.to_vec();
    for _ in 0..m {
        x = uhmc_step(model, &x, params, stream);
        positions.push(x.clone());
    }
    ChainRecord { positions }
}

/// One exact-HMC transition on a Gaussian target: refresh the velocity,
/// apply the exact flow for duration `T`, keep the position.
pub fn exact_hmc_step(
    model: &PotentialModel,
    x: &[f64],
    duration: f64,
    stream: &mut RandomStream,
) -> Vec<f64> {
    assert!(duration >= 0.0);
    let xi = stream.draw_std_normal_vector(model.dim());
    let state = PhasePoint::new(x.to_vec(), xi);
    exact_flow_gaussian(model, &state, duration).x
}

/// Distribution of the two-stage coefficient `b` inside the adjusted chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhoKind {
    /// `b ~ Uniform(0, 1/2)`.
    UniformContinuous,
    /// `b ~ Uniform{0, 1/2}` (velocity/position Verlet mixture).
    UniformTwoPoint,
}

/// Accept/reject bookkeeping of one adjusted transition.
#[derive(Clone, Copy, Debug)]
pub struct AdjustedInfo {
    pub accepted: bool,
    /// `H(proposal) - H(x, xi)`.
    pub delta_h: f64,
}

/// Metropolis-adjusted HMC transition with a randomized two-stage proposal.
///
/// Draw order is fixed: `xi ~ N(0, I_d)`, then `b_1..b_N` i.i.d. from `rho`,
/// then `V ~ Uniform(0,1)`. The proposal chains `N` two-stage steps of size
/// `h` with those coefficients; it is accepted iff
/// `V <= exp(-[H(proposal) - H(x, xi)]^+)`, and on rejection the chain sits
/// at the velocity-flipped point `(x, -xi)`.
pub fn adjusted_hmc_step<P: Potential + ?Sized>(
    model: &P,
    state: &PhasePoint,
    h: f64,
    n_steps: usize,
    rho_kind: RhoKind,
    stream: &mut RandomStream,
) -> (PhasePoint, AdjustedInfo) {
    assert!(n_steps >= 1, "need at least one proposal step");
    assert!(h > 0.0);
    let d = state.dim();
    let mut xi = vec![0.0; d];
    stream.fill_std_normal(&mut xi);
    let start = PhasePoint::new(state.x.clone(), xi.clone());
    let h_start = hamiltonian(model, &start);

    let mut x = state.x.clone();
    let mut v = xi.clone();
    let mut scratch = Scratch::new(d);
    for _ in 0..n_steps {
        let b = match rho_kind {
            RhoKind::UniformContinuous => stream.draw_uniform(0.0, 0.5),
            RhoKind::UniformTwoPoint => {
                if stream.unit_uniform() < 0.5 {
                    0.0
                } else {
                    0.5
                }
            }
        };
        two_stage_in_place(model, &mut x, &mut v, h, b, &mut scratch);
    }
    let proposal = PhasePoint::new(x, v);
    let delta_h = hamiltonian(model, &proposal) - h_start;
    let accept_prob = (-delta_h.max(0.0)).exp();
    let coin = stream.unit_uniform();
    if coin <= accept_prob {
        (
            proposal,
            AdjustedInfo {
                accepted: true,
                delta_h,
            },
        )
    } else {
        let flipped: Vec<f64> = xi.iter().map(|z| -z).collect();
        (
            PhasePoint::new(state.x.clone(), flipped),
            AdjustedInfo {
                accepted: false,
                delta_h,
            },
        )
    }
}

/// Randomized uHMC as a Markov jump process.
///
/// Events arrive at exponential spacings with mean `h / (lambda h + 1)`.
/// Each event draws, in this fixed order, `dt`, `xi ~ N(0, I_d)`,
/// `u ~ Uniform(0, h)`, `coin ~ Uniform(0, 1)` (all four every event, so
/// couplings that share a stream stay aligned), then either refreshes the
/// velocity to `xi` (probability `lambda h / (1 + lambda h)`) or applies one
/// sMC step with offset `u`. The run stops at the first jump time past
/// `t_end`; that event is not applied.
pub fn randomized_uhmc_run<P: Potential + ?Sized>(
    model: &P,
    state0: &PhasePoint,
    lambda: f64,
    h: f64,
    t_end: f64,
    stream: &mut RandomStream,
) -> JumpPath {
    assert!(lambda > 0.0 && h > 0.0 && t_end > 0.0);
    assert_eq!(state0.dim(), model.dim(), "dimension mismatch");
    let d = state0.dim();
    let mean_dt = h / (lambda * h + 1.0);
    let refresh_prob = lambda * h / (1.0 + lambda * h);
    let mut x = state0.x.clone();
    let mut v = state0.v.clone();
    let mut xi = vec![0.0; d];
    let mut scratch = Scratch::new(d);
    let mut t = 0.0;
    let mut events = Vec::new();
    loop {
        let dt = stream.draw_exponential(mean_dt);
        stream.fill_std_normal(&mut xi);
        let u = stream.draw_uniform(0.0, h);
        let coin = stream.unit_uniform();
        t += dt;
        if t > t_end {
            break;
        }
        let kind = if coin <= refresh_prob {
            v.copy_from_slice(&xi);
            EventKind::Refresh
        } else {
            smc_step_in_place(model, &mut x, &mut v, h, u, &mut scratch);
            EventKind::Integrate
        };
        events.push(JumpEvent {
            time: t,
            state: PhasePoint::new(x.clone(), v.clone()),
            kind,
        });
    }
    JumpPath { events }
}

/// Parameter choices for the uHMC chain meeting accuracy `epsilon` from an
/// initial Wasserstein distance `w2_init`.
#[derive(Clone, Copy, Debug)]
pub struct UhmcTuning {
    /// Duration `T = (8L)^{-1/2}`.
    pub duration: f64,
    /// Step actually used: `T/n` with `n = ceil(T/h*)`, so `h <= h_star`.
    pub h: f64,
    /// Steps per transition.
    pub n: usize,
    /// Step-size bound `h*` from the complexity theorem.
    pub h_star: f64,
    /// Contraction coefficient `c = K/(48L)` per transition.
    pub c: f64,
    /// Transitions needed: `ceil(c^{-1} log(2 w2_init / epsilon)^+)`.
    pub m: u64,
}

/// uHMC tuning per the complexity theorem: `T = (8L)^{-1/2}`, `c = K/(48L)`,
/// `m = ceil(c^{-1} log(2 w2_init/eps)^+)`, and
/// `h* = e^{-4} (c (eps/2) / (d^{1/2} (L/K)^{1/2} L^{1/4}))^{2/3}`.
pub fn tune_uhmc(
    k: f64,
    l: f64,
    d: usize,
    epsilon: f64,
    w2_init: f64,
) -> Result<UhmcTuning, Error> {
    check_tuning_inputs(k, l, d, epsilon, w2_init)?;
    let duration = 1.0 / (8.0 * l).sqrt();
    let c = k / (48.0 * l);
    let log_arg = (2.0 * w2_init / epsilon).ln().max(0.0);
    let m = (log_arg / c).ceil() as u64;
    let h_star = (-4.0f64).exp()
        * (c * (epsilon / 2.0) / (d as f64).sqrt() / (l / k).sqrt() / l.powf(0.25)).powf(2.0 / 3.0);
    let n = (duration / h_star).ceil().max(1.0) as usize;
    let h = duration / n as f64;
    Ok(UhmcTuning {
        duration,
        h,
        n,
        h_star,
        c,
        m,
    })
}

/// Parameter choices for the randomized (jump-process) variant.
#[derive(Clone, Copy, Debug)]
pub struct JumpTuning {
    /// Refresh intensity `lambda = 12 L^{1/2}`.
    pub lambda: f64,
    /// Contraction rate `gamma = K / (10 lambda)`.
    pub gamma: f64,
    /// Horizon `t_end` from the complexity remark.
    pub t_end: f64,
    /// Step bound: `h = 1 / (2 max(term_1, term_2))` of the remark.
    pub h: f64,
}

/// Jump-process tuning: `lambda = 12 sqrt(L)`, `gamma = K/(10 lambda)`,
/// horizon `240 K^{-1/2} (L/K)^{1/2} log(3 max(L^{1/2}/12, 12 L^{-1/2})
/// w2_init / eps)^+`, and the literal two-term step bound.
pub fn tune_randomized(
    k: f64,
    l: f64,
    d: usize,
    epsilon: f64,
    w2_init: f64,
) -> Result<JumpTuning, Error> {
    check_tuning_inputs(k, l, d, epsilon, w2_init)?;
    let lambda = 12.0 * l.sqrt();
    let gamma = k / (10.0 * lambda);
    let log_arg = 3.0 * (l.sqrt() / 12.0).max(12.0 / l.sqrt()) * w2_init / epsilon;
    let t_end = 240.0 / k.sqrt() * (l / k).sqrt() * log_arg.ln().max(0.0);
    let dk = d as f64 / k;
    let term_1 = (8.0 * 195.0f64).powf(0.25) * k.sqrt() * dk.powf(0.25) * (l / k) / epsilon.sqrt();
    let term_2 =
        2.0 * 390.0f64.powf(1.0 / 3.0) * k.sqrt() * dk.powf(1.0 / 3.0) * (l / k).powf(5.0 / 6.0)
            / epsilon.powf(2.0 / 3.0);
    let h = 1.0 / (2.0 * term_1.max(term_2));
    Ok(JumpTuning {
        lambda,
        gamma,
        t_end,
        h,
    })
}

fn check_tuning_inputs(k: f64, l: f64, d: usize, epsilon: f64, w2_init: f64) -> Result<(), Error> {
    if !(k > 0.0 && l > 0.0 && k.is_finite() && l.is_finite()) {
        return Err(Error::Config(format!("need 0 < K <= L, got K={k}, L={l}")));
    }
    if k > l {
        return Err(Error::Config(format!(
            "strong convexity cannot exceed the Lipschitz constant: K={k} > L={l}"
        )));
    }
    if d < 1 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!(
            "accuracy must be positive, got {epsilon}"
        )));
    }
    if w2_init.is_nan() || w2_init < 0.0 {
        return Err(Error::Config(format!(
            "initial distance must be nonnegative, got {w2_init}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::smc_step;
    use crate::randomness::make_stream;
    use crate::stats::batch_means;
    use crate::test_support::Flat;

    fn iso1() -> PotentialModel {
        PotentialModel::isotropic(1.0, 1)
    }

    #[test]
    fn uhmc_step_replays_as_one_smc_step() {
        let m = iso1();
        let params = IntegratorParams::new(0.25, 0.25);
        let mut stream = make_stream(41, 0);
        let mut replay = stream.clone();
        let out = uhmc_step(&m, &[1.0], params, &mut stream);
        let xi = replay.draw_std_normal_vector(1);
        let u = replay.draw_uniform(0.0, 0.25);
        let expect = smc_step(&m, &PhasePoint::new(vec![1.0], xi), 0.25, u);
        assert_eq!(out, expect.x);
    }

    #[test]
    fn uhmc_step_matches_trajectory_endpoint() {
        let m = PotentialModel::anisotropic(vec![1.0, 4.0]);
        let params = IntegratorParams::new(0.3, 0.1);
        let mut stream = make_stream(42, 3);
        let mut replay = stream.clone();
        let out = uhmc_step(&m, &[1.0, -2.0], params, &mut stream);
        let xi = replay.draw_std_normal_vector(2);
        let traj = crate::integrators::smc_trajectory(
            &m,
            &PhasePoint::new(vec![1.0, -2.0], xi),
            params,
            &mut replay,
        );
        assert_eq!(out, traj.last().unwrap().1.x);
    }

    #[test]
    fn uhmc_step_approaches_exact_flow_for_tiny_h() {
        let m = iso1();
        let params = IntegratorParams::new(1.0, 1.0 / 1024.0);
        for trial in 0..20 {
            let mut stream = make_stream(43, trial);
            let mut replay = stream.clone();
            let out = uhmc_step(&m, &[1.0], params, &mut stream);
            let xi = replay.draw_std_normal_vector(1);
            let exact = exact_flow_gaussian(&m, &PhasePoint::new(vec![1.0], xi), 1.0);
            assert!((out[0] - exact.x[0]).abs() < 1e-3);
        }
    }

    #[test]
    fn chain_record_shape() {
        let m = iso1();
        let params = IntegratorParams::new(0.25, 0.25);
        let mut stream = make_stream(44, 0);
        let rec = uhmc_chain(&m, &[2.0], params, 0, &mut stream);
        assert_eq!(rec.positions, vec![vec![2.0]]);
        let rec = uhmc_chain(&m, &[2.0], params, 10, &mut stream);
        assert_eq!(rec.positions.len(), 11);
        assert!(rec.positions.iter().flatten().all(|c| c.is_finite()));
    }

    #[test]
    fn chain_reaches_the_right_variance() {
        // Tuned chain on the unit Gaussian: the late-chain position variance
        // must sit near 1/K = 1, and the second moment under d/K * 1.1.
        let m = iso1();
        let tune = tune_uhmc(1.0, 1.0, 1, 0.1, 1.0).unwrap();
        let params = IntegratorParams::from_steps(tune.duration, tune.n);
        let seeds = 10;
        let mut vars = Vec::new();
        let mut second_moment = 0.0;
        for seed in 0..seeds {
            let mut stream = make_stream(45, seed);
            let rec = uhmc_chain(&m, &[2.0], params, 2000, &mut stream);
            let tail: Vec<f64> = rec.positions[1001..].iter().map(|p| p[0]).collect();
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            let var =
                tail.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (tail.len() - 1) as f64;
            vars.push(var);
            second_moment += tail.iter().map(|x| x * x).sum::<f64>() / tail.len() as f64;
        }
        let mean_var = vars.iter().sum::<f64>() / seeds as f64;
        let sd = (vars
            .iter()
            .map(|v| (v - mean_var) * (v - mean_var))
            .sum::<f64>()
            / (seeds - 1) as f64)
            .sqrt();
        let tol = (3.0 * sd / (seeds as f64).sqrt()).max(0.10);
        assert!((mean_var - 1.0).abs() < tol, "var {mean_var}, tol {tol}");
        assert!(second_moment / seeds as f64 <= 1.1, "second moment too big");
    }

    #[test]
    fn exact_hmc_identity_and_quarter_period() {
        let m = PotentialModel::isotropic(4.0, 1);
        let mut stream = make_stream(46, 0);
        let out = exact_hmc_step(&m, &[3.0], 0.0, &mut stream);
        assert_eq!(out, vec![3.0]);
        // Quarter period rotates the state onto the velocity axis.
        let duration = std::f64::consts::FRAC_PI_2 / 2.0;
        let mut replay = stream.clone();
        let out = exact_hmc_step(&m, &[3.0], duration, &mut stream);
        let xi = replay.draw_std_normal_vector(1);
        assert!((out[0] - xi[0] / 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_hmc_preserves_the_target() {
        let k = 2.0;
        let m = PotentialModel::isotropic(k, 1);
        let mut stream = make_stream(47, 0);
        let n = 100_000;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let x = stream.draw_std_normal() / k.sqrt();
            let y = exact_hmc_step(&m, &[x], 0.7, &mut stream);
            sum2 += y[0] * y[0];
        }
        let var = sum2 / n as f64;
        let tol = 3.0 * (2.0 / n as f64).sqrt() / k;
        assert!((var - 1.0 / k).abs() < tol, "var {var}");
    }

    #[test]
    fn adjusted_free_flight_always_accepts() {
        let flat = Flat(2);
        let state = PhasePoint::new(vec![1.0, -1.0], vec![9.0, 9.0]);
        let mut stream = make_stream(48, 0);
        let mut replay = stream.clone();
        let (out, info) = adjusted_hmc_step(
            &flat,
            &state,
            0.5,
            4,
            RhoKind::UniformContinuous,
            &mut stream,
        );
        assert!(info.accepted && info.delta_h == 0.0);
        let xi = replay.draw_std_normal_vector(2);
        for (j, xi_j) in xi.iter().enumerate() {
            assert!((out.x[j] - (state.x[j] + 4.0 * 0.5 * xi_j)).abs() < 1e-12);
            assert_eq!(out.v[j], *xi_j);
        }
    }

    #[test]
    fn adjusted_acceptance_replays_from_the_definition() {
        let m = PotentialModel::DoubleWell;
        for (seed, rho) in [
            (1u64, RhoKind::UniformContinuous),
            (2, RhoKind::UniformContinuous),
            (3, RhoKind::UniformTwoPoint),
            (4, RhoKind::UniformTwoPoint),
        ] {
            let state = PhasePoint::new(vec![1.4], vec![0.0]);
            let mut stream = make_stream(49, seed);
            let mut replay = stream.clone();
            let (out, info) = adjusted_hmc_step(&m, &state, 0.4, 3, rho, &mut stream);
            // Re-derive the draws and recompute everything independently.
            let xi = replay.draw_std_normal_vector(1);
            let mut point = PhasePoint::new(state.x.clone(), xi.clone());
            let start_h = hamiltonian(&m, &point);
            for _ in 0..3 {
                let b = match rho {
                    RhoKind::UniformContinuous => replay.draw_uniform(0.0, 0.5),
                    RhoKind::UniformTwoPoint => {
                        if replay.unit_uniform() < 0.5 {
                            0.0
                        } else {
                            0.5
                        }
                    }
                };
                point = crate::integrators::two_stage_step(&m, &point, 0.4, b);
            }
            let delta_h = hamiltonian(&m, &point) - start_h;
            assert!((info.delta_h - delta_h).abs() < 1e-14);
            let coin = replay.unit_uniform();
            let should_accept = coin <= (-delta_h.max(0.0)).exp();
            assert_eq!(info.accepted, should_accept);
            if should_accept {
                assert_eq!(out.x, point.x);
            } else {
                assert_eq!(out.x, state.x);
                assert_eq!(out.v[0], -xi[0]);
            }
        }
    }

    #[test]
    fn adjusted_chain_is_exact_for_the_gaussian() {
        // 2e5 transitions at a coarse step: position and velocity marginals
        // must match N(0,1) within 3 batch-means sigma. This is the bias-free
        // property the adjustment buys.
        let m = iso1();
        let steps = 200_000;
        let mut stream = make_stream(50, 0);
        let mut state = PhasePoint::new(vec![0.0], vec![0.0]);
        let mut xs = Vec::with_capacity(steps);
        let mut vs = Vec::with_capacity(steps);
        let mut accepted = 0usize;
        for _ in 0..steps {
            let (next, info) =
                adjusted_hmc_step(&m, &state, 0.5, 4, RhoKind::UniformContinuous, &mut stream);
            if info.accepted {
                accepted += 1;
            }
            state = next;
            xs.push(state.x[0]);
            vs.push(state.v[0]);
        }
        let accept_rate = accepted as f64 / steps as f64;
        assert!(accept_rate > 0.9, "acceptance collapsed: {accept_rate}");
        for (label, series) in [("x", &xs), ("v", &vs)] {
            let (mean, mean_se) = batch_means(series, 200);
            assert!(
                mean.abs() < 3.0 * mean_se,
                "{label} mean {mean} se {mean_se}"
            );
            let sq: Vec<f64> = series.iter().map(|z| z * z).collect();
            let (var, var_se) = batch_means(&sq, 200);
            assert!(
                (var - 1.0).abs() < 3.0 * var_se,
                "{label} var {var} se {var_se}"
            );
        }
    }

    #[test]
    fn jump_process_statistics() {
        let m = iso1();
        let state0 = PhasePoint::new(vec![1.0], vec![0.0]);
        let (lambda, h) = (1.0, 0.5);
        // Expected event rate 3 per unit time, refresh fraction 1/3.
        let mut stream = make_stream(51, 0);
        let t_end = 35_000.0;
        let path = randomized_uhmc_run(&m, &state0, lambda, h, t_end, &mut stream);
        let n = path.events.len();
        assert!(n > 100_000, "expected ~105k events, got {n}");
        let refresh_frac = path.refresh_count() as f64 / n as f64;
        let p = lambda * h / (1.0 + lambda * h);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((refresh_frac - p).abs() < 3.0 * se, "{refresh_frac} vs {p}");
        // Mean spacing h/(lambda h + 1) = 1/3.
        let mean_dt = path.events.last().unwrap().time / n as f64;
        let se_dt = (1.0 / 3.0) / (n as f64).sqrt();
        assert!((mean_dt - 1.0 / 3.0).abs() < 3.0 * se_dt);
        // Gradient work per unit time is 1/h.
        let rate = path.integrate_count() as f64 / path.events.last().unwrap().time;
        assert!((rate - 1.0 / h).abs() < 0.05 / h, "rate {rate}");
        // Structural invariants along the path.
        let mut prev_time = 0.0;
        let mut prev_x = state0.x.clone();
        for e in &path.events {
            assert!(e.time > prev_time);
            if e.kind == EventKind::Refresh {
                assert_eq!(e.state.x, prev_x, "refresh must keep the position");
            }
            prev_time = e.time;
            prev_x = e.state.x.clone();
        }
    }

    #[test]
    fn tuning_matches_worked_example() {
        let t = tune_uhmc(1.0, 1.0, 1, 0.1, 1.0).unwrap();
        assert_eq!(t.c, 1.0 / 48.0);
        assert_eq!(t.m, 144);
        assert!((t.duration * t.duration - 0.125).abs() < 1e-16);
        let h_star = (-4.0f64).exp() * (0.05 / 48.0f64).powf(2.0 / 3.0);
        assert!((t.h_star - h_star).abs() < 1e-12 * h_star);
        assert!(t.h_star > 1.8e-4 && t.h_star < 1.9e-4);
        assert!(t.h <= t.h_star && t.n as f64 * t.h == t.duration);
        // Clamp: no transitions needed when already within accuracy.
        let t = tune_uhmc(1.0, 1.0, 1, 2.0, 1.0).unwrap();
        assert_eq!(t.m, 0);
        // Monotonicity: easier targets need fewer transitions, allow bigger h.
        let loose = tune_uhmc(1.0, 1.0, 1, 0.2, 1.0).unwrap();
        let tight = tune_uhmc(1.0, 1.0, 1, 0.1, 1.0).unwrap();
        assert!(loose.m < tight.m);
        assert!(loose.h_star > tight.h_star);
    }

    #[test]
    fn jump_tuning_matches_worked_example() {
        let t = tune_randomized(1.0, 1.0, 1, 0.1, 1.0).unwrap();
        assert_eq!(t.lambda, 12.0);
        assert!((t.gamma - 1.0 / 120.0).abs() < 1e-18);
        assert!(t.t_end > 0.0 && t.h > 0.0);
        let t = tune_randomized(1.0, 4.0, 1, 0.1, 1.0).unwrap();
        assert_eq!(t.lambda, 24.0);
        // gamma = K/(10 lambda) identity across parameter choices.
        for (k, l) in [(0.5, 2.0), (1.0, 9.0), (2.0, 2.0)] {
            let t = tune_randomized(k, l, 3, 0.05, 2.0).unwrap();
            assert!((t.gamma - k / (10.0 * t.lambda)).abs() < 1e-18);
        }
    }

    #[test]
    fn tuning_rejects_bad_inputs() {
        assert!(tune_uhmc(2.0, 1.0, 1, 0.1, 1.0).is_err());
        assert!(tune_uhmc(0.0, 1.0, 1, 0.1, 1.0).is_err());
        assert!(tune_uhmc(1.0, 1.0, 0, 0.1, 1.0).is_err());
        assert!(tune_uhmc(1.0, 1.0, 1, 0.0, 1.0).is_err());
        assert!(tune_uhmc(1.0, 1.0, 1, 0.1, -1.0).is_err());
        assert!(tune_randomized(2.0, 1.0, 1, 0.1, 1.0).is_err());
    }
}
