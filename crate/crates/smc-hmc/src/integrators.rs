//! Time integrators for the Hamiltonian flow with unit mass: the stratified
//! Monte Carlo (sMC) step, velocity Verlet as the `b = 0` member of the
//! palindromic two-stage family, the exact flow for Gaussian targets, a
//! fine-step reference oracle for everything else, and the stratum-average
//! force that the sMC step estimates without bias.

use crate::potentials::{Potential, PotentialModel};
use crate::randomness::RandomStream;

/// A position/velocity pair in phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(x.len(), v.len(), "position/velocity dimension mismatch");
        assert!(
            x.iter().chain(&v).all(|c| c.is_finite()),
            "phase point entries must be finite"
        );
        PhasePoint { x, v }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Squared phase-space distance `|x_a - x_b|^2 + |v_a - v_b|^2`.
    pub fn sq_distance(&self, other: &PhasePoint) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let mut acc = 0.0;
        for j in 0..self.dim() {
            let dx = self.x[j] - other.x[j];
            let dv = self.v[j] - other.v[j];
            acc += dx * dx + dv * dv;
        }
        acc
    }
}

/// Duration `T`, step `h`, and step count `n` with `n * h = T`.
///
/// `T/h` is forced into the integers by `n = round(T/h)`, `h := T/n`; a
/// warning is printed when that adjustment moves `h` by more than `1e-12`
/// relative, since the caller's grid then differs from the one actually run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorParams {
    pub duration: f64,
    pub h: f64,
    pub n: usize,
}

impl IntegratorParams {
    pub fn new(duration: f64, h: f64) -> Self {
        assert!(duration >= 0.0 && h > 0.0, "need T >= 0 and h > 0");
        if duration == 0.0 {
            // Degenerate identity flow; keep the requested h for bookkeeping.
            return IntegratorParams { duration, h, n: 0 };
        }
        let n = (duration / h).round().max(1.0) as usize;
        let adjusted = duration / n as f64;
        if ((adjusted - h) / h).abs() > 1e-12 {
            eprintln!(
                "integrators: step adjusted from {h} to {adjusted} so that T/h = {n} is an integer"
            );
        }
        IntegratorParams {
            duration,
            h: adjusted,
            n,
        }
    }

    /// Builds the grid from an explicit step count (no adjustment warning).
    pub fn from_steps(duration: f64, n: usize) -> Self {
        assert!(duration > 0.0 && n >= 1);
        IntegratorParams {
            duration,
            h: duration / n as f64,
            n,
        }
    }
}

/// Grid-point states `(t_i, state_i)` for `i = 0..n`.
pub type Trajectory = Vec<(f64, PhasePoint)>;

/// Reusable per-worker buffers for the in-place steppers.
pub(crate) struct Scratch {
    probe: Vec<f64>,
    grad_a: Vec<f64>,
    grad_b: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(d: usize) -> Self {
        Scratch {
            probe: vec![0.0; d],
            grad_a: vec![0.0; d],
            grad_b: vec![0.0; d],
        }
    }
}

/// In-place sMC step; see [`smc_step`] for the formula.
pub(crate) fn smc_step_in_place<P: Potential + ?Sized>(
    model: &P,
    x: &mut [f64],
    v: &mut [f64],
    h: f64,
    u_offset: f64,
    s: &mut Scratch,
) {
    assert!(
        (0.0..h).contains(&u_offset),
        "u_offset must lie in [0, h), got {u_offset} for h = {h}"
    );
    for j in 0..x.len() {
        s.probe[j] = x[j] + u_offset * v[j];
    }
    model.gradient_into(&s.probe, &mut s.grad_a);
    let half_h2 = 0.5 * h * h;
    for j in 0..x.len() {
        let f = -s.grad_a[j];
        x[j] += h * v[j] + half_h2 * f;
        v[j] += h * f;
    }
}

/// One sMC step: with `F = -grad U(x + u_offset * v)`,
/// returns `(x + h v + (h^2/2) F,  v + h F)`.
///
/// The same force estimate drives both updates; `u_offset` is the uniform
/// offset of the evaluation point inside the stratum `[0, h)`. One gradient
/// evaluation.
pub fn smc_step<P: Potential + ?Sized>(
    model: &P,
    state: &PhasePoint,
    h: f64,
    u_offset: f64,
) -> PhasePoint {
    let mut x = state.x.clone();
    let mut v = state.v.clone();
    let mut s = Scratch::new(x.len());
    smc_step_in_place(model, &mut x, &mut v, h, u_offset, &mut s);
    PhasePoint::new(x, v)
}

/// Runs `params.n` sMC steps, drawing one stratum offset
/// `u ~ Uniform[0, h)` per step, and records every grid point.
///
/// Costs exactly `n` gradient evaluations.
pub fn smc_trajectory<P: Potential + ?Sized>(
    model: &P,
    state0: &PhasePoint,
    params: IntegratorParams,
    stream: &mut RandomStream,
) -> Trajectory {
    assert_eq!(state0.dim(), model.dim(), "dimension mismatch");
    let mut out = Vec::with_capacity(params.n + 1);
    out.push((0.0, state0.clone()));
    let mut x = state0.x.clone();
    let mut v = state0.v.clone();
    let mut s = Scratch::new(x.len());
    for i in 1..=params.n {
        let u = stream.draw_uniform(0.0, params.h);
        smc_step_in_place(model, &mut x, &mut v, params.h, u, &mut s);
        let t = if i == params.n {
            params.duration
        } else {
            i as f64 * params.h
        };
        out.push((t, PhasePoint::new(x.clone(), v.clone())));
    }
    out
}

/// In-place two-stage step; see [`two_stage_step`].
pub(crate) fn two_stage_in_place<P: Potential + ?Sized>(
    model: &P,
    x: &mut [f64],
    v: &mut [f64],
    h: f64,
    b: f64,
    s: &mut Scratch,
) {
    assert!((0.0..=0.5).contains(&b), "b must lie in [0, 1/2], got {b}");
    assert!(h > 0.0);
    let d = x.len();
    for j in 0..d {
        s.probe[j] = x[j] + b * h * v[j];
    }
    model.gradient_into(&s.probe, &mut s.grad_a);
    let half_h2 = 0.5 * h * h;
    for j in 0..d {
        s.probe[j] = x[j] + (1.0 - b) * h * v[j] + (1.0 - 2.0 * b) * half_h2 * (-s.grad_a[j]);
    }
    model.gradient_into(&s.probe, &mut s.grad_b);
    for j in 0..d {
        let f_plus = -s.grad_a[j];
        let f_minus = -s.grad_b[j];
        x[j] += h * v[j] + (1.0 - b) * half_h2 * f_plus + b * half_h2 * f_minus;
        v[j] += 0.5 * h * (f_plus + f_minus);
    }
}

/// One step of the palindromic two-stage family with parameter
/// `b in [0, 1/2]`: drift `b h`, half kick, drift `(1-2b) h`, half kick,
/// drift `b h`. `b = 0` is velocity Verlet, `b = 1/2` position Verlet.
/// Always two gradient evaluations, even at the endpoints.
pub fn two_stage_step<P: Potential + ?Sized>(
    model: &P,
    state: &PhasePoint,
    h: f64,
    b: f64,
) -> PhasePoint {
    let mut x = state.x.clone();
    let mut v = state.v.clone();
    let mut s = Scratch::new(x.len());
    two_stage_in_place(model, &mut x, &mut v, h, b, &mut s);
    PhasePoint::new(x, v)
}

/// Velocity Verlet: the `b = 0` member of [`two_stage_step`], bit for bit.
pub fn verlet_step<P: Potential + ?Sized>(model: &P, state: &PhasePoint, h: f64) -> PhasePoint {
    two_stage_step(model, state, h, 0.0)
}

/// Exact Hamiltonian flow for Gaussian targets: per coordinate with
/// curvature `k_j` and `w = sqrt(k_j)`,
/// `q = x cos(w t) + (v/w) sin(w t)`, `p = -x w sin(w t) + v cos(w t)`.
/// Panics on non-Gaussian models.
pub fn exact_flow_gaussian(model: &PotentialModel, state: &PhasePoint, t: f64) -> PhasePoint {
    let ks = model
        .gaussian_curvatures()
        .expect("exact flow requires a Gaussian model");
    assert_eq!(state.dim(), ks.len(), "dimension mismatch");
    let mut x = vec![0.0; ks.len()];
    let mut v = vec![0.0; ks.len()];
    for j in 0..ks.len() {
        let w = ks[j].sqrt();
        let (sin, cos) = (w * t).sin_cos();
        x[j] = state.x[j] * cos + state.v[j] / w * sin;
        v[j] = -state.x[j] * w * sin + state.v[j] * cos;
    }
    PhasePoint::new(x, v)
}

/// Fine-step Verlet oracle for non-Gaussian flows. Contract: pick
/// `h_ref <= h/64` of the smallest experimental step so the reference error
/// is negligible against the measured one.
pub fn reference_flow(
    model: &PotentialModel,
    state: &PhasePoint,
    t: f64,
    h_ref: f64,
) -> PhasePoint {
    assert!(h_ref > 0.0 && t >= 0.0);
    if t == 0.0 {
        return state.clone();
    }
    let n = (t / h_ref).round().max(1.0) as usize;
    let h = t / n as f64;
    let mut x = state.x.clone();
    let mut v = state.v.clone();
    let mut s = Scratch::new(x.len());
    for _ in 0..n {
        two_stage_in_place(model, &mut x, &mut v, h, 0.0, &mut s);
    }
    PhasePoint::new(x, v)
}

/// The stratum-average force `-(1/h) \int_0^h grad U(x + s v) ds` that one
/// sMC force draw estimates without bias.
///
/// Gaussian targets use the exact closed form `-grad U(x + (h/2) v)` (the
/// integrand is linear); other models use Gauss-Legendre quadrature with
/// `quad_order` nodes.
pub fn stratum_average_force(
    model: &PotentialModel,
    state: &PhasePoint,
    h: f64,
    quad_order: usize,
) -> Vec<f64> {
    assert!(h > 0.0 && quad_order >= 2);
    let d = state.dim();
    if model.is_gaussian() {
        let mid: Vec<f64> = (0..d).map(|j| state.x[j] + 0.5 * h * state.v[j]).collect();
        let mut g = vec![0.0; d];
        model.gradient_into(&mid, &mut g);
        for gj in g.iter_mut() {
            *gj = -*gj;
        }
        return g;
    }
    let (nodes, weights) = gauss_legendre(quad_order);
    let mut acc = vec![0.0; d];
    let mut probe = vec![0.0; d];
    let mut grad = vec![0.0; d];
    for (node, weight) in nodes.iter().zip(&weights) {
        // Map [-1, 1] onto [0, h]; the h/2 Jacobian cancels against 1/h
        // up to the factor 1/2 folded into the weight sum below.
        let sj = 0.5 * h * (node + 1.0);
        for (p, (xj, vj)) in probe.iter_mut().zip(state.x.iter().zip(&state.v)) {
            *p = xj + sj * vj;
        }
        model.gradient_into(&probe, &mut grad);
        for (a, g) in acc.iter_mut().zip(&grad) {
            *a += 0.5 * weight * g;
        }
    }
    for a in acc.iter_mut() {
        *a = -*a;
    }
    acc
}

/// Unit-mass Hamiltonian `H(x, v) = |v|^2 / 2 + U(x)`.
pub fn hamiltonian<P: Potential + ?Sized>(model: &P, state: &PhasePoint) -> f64 {
    0.5 * state.v.iter().map(|vi| vi * vi).sum::<f64>() + model.energy(&state.x)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre polynomial from the Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let delta = p / d;
            x -= delta;
            if delta.abs() < 1e-15 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Roots come out in descending order; store symmetrically.
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Evaluates `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
