//! Statistical helpers shared by the experiments: empirical Wasserstein
//! distances, moment summaries, L² errors, log-log order fits, and a
//! high-precision normal quantile.

// The AS241 coefficients and frozen golden values keep their published
// digits, a few of which exceed f64 precision.
#![allow(clippy::excessive_precision)]

use crate::integrators::PhasePoint;

/// Least-squares fit of `log(error)` against `log(h)`.
#[derive(Clone, Copy, Debug)]
pub struct SlopeFit {
    /// Empirical order: d log(error) / d log(h).
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the fit residuals in log space.
    pub residual: f64,
}

/// Exact empirical 2-Wasserstein distance between two equal-size scalar
/// samples, via the order-statistics coupling: sort both, pair by rank,
/// take the RMS gap. Panics on unequal or empty inputs.
pub fn empirical_w2_1d(samples_a: &[f64], samples_b: &[f64]) -> f64 {
    assert_eq!(samples_a.len(), samples_b.len(), "sample counts must match");
    assert!(!samples_a.is_empty(), "need at least one sample");
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    let sum2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum2 / n).sqrt()
}

/// Closed-form W² between diagonal Gaussians:
/// `sqrt(|mean_a - mean_b|^2 + sum_j (sqrt(var_a_j) - sqrt(var_b_j))^2)`.
/// Used as a moment-matched proxy for sampler bias.
pub fn gaussian_w2_diag(mean_a: &[f64], var_a: &[f64], mean_b: &[f64], var_b: &[f64]) -> f64 {
    let d = mean_a.len();
    assert!(var_a.len() == d && mean_b.len() == d && var_b.len() == d);
    assert!(
        var_a.iter().chain(var_b).all(|&v| v > 0.0),
        "variances must be positive"
    );
    let mut acc = 0.0;
    for j in 0..d {
        let dm = mean_a[j] - mean_b[j];
        let ds = var_a[j].sqrt() - var_b[j].sqrt();
        acc += dm * dm + ds * ds;
    }
    acc.sqrt()
}

/// OLS fit of `log(errors)` on `log(h_values)`; the slope is the empirical
/// convergence order. Requires at least 3 strictly positive pairs.
pub fn fit_loglog_slope(h_values: &[f64], errors: &[f64]) -> SlopeFit {
    assert_eq!(h_values.len(), errors.len(), "point counts must match");
    assert!(h_values.len() >= 3, "need at least 3 points for a slope");
    assert!(
        h_values.iter().chain(errors).all(|&v| v > 0.0),
        "log-log fit needs strictly positive values"
    );
    let n = h_values.len() as f64;
    let xs: Vec<f64> = h_values.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    SlopeFit {
        slope,
        intercept,
        residual: (ss_res / n).sqrt(),
    }
}

/// RMS phase-space error over endpoint pairs:
/// `sqrt(mean(|x_a - x_b|^2 + |v_a - v_b|^2))`.
pub fn l2_error(pairs: &[(PhasePoint, PhasePoint)]) -> f64 {
    assert!(!pairs.is_empty(), "need at least one pair");
    let sum: f64 = pairs.iter().map(|(a, b)| a.sq_distance(b)).sum();
    (sum / pairs.len() as f64).sqrt()
}

/// Per-coordinate mean and unbiased variance. Requires N >= 2.
pub fn sample_moments(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    assert!(samples.len() >= 2, "need at least two samples");
    let d = samples[0].len();
    let n = samples.len() as f64;
    let mut mean = vec![0.0; d];
    for s in samples {
        assert_eq!(s.len(), d, "dimension mismatch");
        for j in 0..d {
            mean[j] += s[j];
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for s in samples {
        for j in 0..d {
            let c = s[j] - mean[j];
            var[j] += c * c;
        }
    }
    for v in var.iter_mut() {
        *v /= n - 1.0;
    }
    (mean, var)
}

/// Mean and a batch-means standard error for a (possibly autocorrelated)
/// scalar chain: split into `batches` contiguous blocks, use the spread of
/// block means. The chain length must be a multiple-ish of the batch count;
/// a ragged tail is dropped.
pub fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    assert!(batches >= 2 && xs.len() >= 2 * batches, "chain too short");
    let bl = xs.len() / batches;
    let used = bl * batches;
    let mean = xs[..used].iter().sum::<f64>() / used as f64;
    let mut sq = 0.0;
    for b in 0..batches {
        let bm = xs[b * bl..(b + 1) * bl].iter().sum::<f64>() / bl as f64;
        sq += (bm - mean) * (bm - mean);
    }
    let var_bm = sq / (batches as f64 - 1.0);
    (mean, (var_bm / batches as f64).sqrt())
}

/// OLS fit of `log(values)` against `times` over the points with
/// `value > floor`; returns `(rate, intercept)` with `rate > 0` meaning
/// exponential decay `exp(intercept - rate * t)`. `None` when fewer than
/// three points clear the floor.
pub fn fit_exp_decay(times: &[f64], values: &[f64], floor: f64) -> Option<(f64, f64)> {
    assert_eq!(times.len(), values.len());
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > floor)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let tbar = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tbar) * (p.0 - tbar)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - tbar) * (p.1 - ybar)).sum();
    let slope = sty / stt;
    Some((-slope, ybar - slope * tbar))
}

/// Sorted inverse-CDF sample of `N(mean, sd^2)` at the plotting positions
/// `(i - 0.5) / n`: a deterministic stand-in for an exact target draw.
pub fn normal_quantile_ladder(n: usize, mean: f64, sd: f64) -> Vec<f64> {
    assert!(n >= 1 && sd > 0.0);
    (0..n)
        .map(|i| mean + sd * standard_normal_quantile((i as f64 + 0.5) / n as f64))
        .collect()
}

/// Inverse CDF of the standard normal, accurate to ~1e-16 relative
/// (Wichura's PPND16 rational approximations). Panics outside (0, 1).
pub fn standard_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&CENTRAL_NUM, r) / poly(&CENTRAL_DEN, r);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        poly(&TAIL_NUM, r) / poly(&TAIL_DEN, r)
    } else {
        let r = r - 5.0;
        poly(&FAR_TAIL_NUM, r) / poly(&FAR_TAIL_DEN, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[inline]
fn poly(coeffs: &[f64; 8], r: f64) -> f64 {
    // Horner, highest degree first.
    coeffs.iter().fold(0.0, |acc, c| acc * r + c)
}

// PPND16 coefficient blocks, highest degree first.
const CENTRAL_NUM: [f64; 8] = [
    2.5090809287301226727e3,
    3.3430575583588128105e4,
    6.7265770927008700853e4,
    4.5921953931549871457e4,
    1.3731693765509461125e4,
    1.9715909503065514427e3,
    1.3314166789178437745e2,
    3.3871328727963666080e0,
];
const CENTRAL_DEN: [f64; 8] = [
    5.2264952788528545610e3,
    2.8729085735721942674e4,
    3.9307895800092710610e4,
    2.1213794301586595867e4,
    5.3941960214247511077e3,
    6.8718700749205790830e2,
    4.2313330701600911252e1,
    1.0,
];
const TAIL_NUM: [f64; 8] = [
    7.74545014278341407640e-4,
    2.27238449892691845833e-2,
    2.41780725177450611770e-1,
    1.27045825245236838258e0,
    3.64784832476320460504e0,
    5.76949722146069140550e0,
    4.63033784615654529590e0,
    1.42343711074968357734e0,
];
const TAIL_DEN: [f64; 8] = [
    1.05075007164441684324e-9,
    5.47593808499534494600e-4,
    1.51986665636164571966e-2,
    1.48103976427480074590e-1,
    6.89767334985100004550e-1,
    1.67638483018380384940e0,
    2.05319162663775882187e0,
    1.0,
];
const FAR_TAIL_NUM: [f64; 8] = [
    2.01033439929228813265e-7,
    2.71155556874348757815e-5,
    1.24266094738807843860e-3,
    2.65321895265761230930e-2,
    2.96560571828504891230e-1,
    1.78482653991729133580e0,
    5.46378491116411436990e0,
    6.65790464350110377720e0,
];
const FAR_TAIL_DEN: [f64; 8] = [
    2.04426310338993978564e-15,
    1.42151175831644588870e-7,
    1.84631831751005468180e-5,
    7.86869131145613259100e-4,
    1.48753612908506148525e-2,
    1.36929880922735805310e-1,
    5.99832206555887937690e-1,
    1.0,
];
