//! Shared test fixtures: a zero-force potential and a gradient-call counter.

use crate::potentials::{Potential, PotentialModel};
use std::sync::atomic::{AtomicUsize, Ordering};

/// Flat potential: zero energy, zero force, free flight under any flow.
pub struct Flat(pub usize);

impl Potential for Flat {
    fn dim(&self) -> usize {
        self.0
    }
    fn energy(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Wrapper that counts gradient evaluations of the inner model.
pub struct Counting<'a> {
    inner: &'a PotentialModel,
    calls: AtomicUsize,
}

impl<'a> Counting<'a> {
    pub fn new(inner: &'a PotentialModel) -> Self {
        Counting {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Potential for Counting<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn energy(&self, x: &[f64]) -> f64 {
        self.inner.energy(x)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient_into(x, out);
    }
}
