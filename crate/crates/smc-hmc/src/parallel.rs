//! Trial fan-out.
//!
//! Monte Carlo trials are embarrassingly parallel: each one owns its own
//! random stream keyed by trial index, so scheduling order cannot change
//! results. `run_trials` maps over trial ids with rayon when the default
//! `parallel` feature is enabled; `run_trials_seq` is the sequential
//! fallback with identical output, used by `--no-default-features` builds
//! and as the baseline in the bench suite.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(0), ..., f(trials - 1)` and returns results in trial order.
pub fn run_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..trials).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_trials_seq(trials, f)
    }
}

/// Sequential twin of [`run_trials`].
pub fn run_trials_seq<T, F>(trials: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..trials).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::make_stream;

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let work = |t: usize| {
            let mut s = make_stream(99, t as u64);
            (0..100).map(|_| s.draw_std_normal()).sum::<f64>()
        };
        let par = run_trials(500, work);
        let seq = run_trials_seq(500, work);
        assert_eq!(par.len(), seq.len());
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
