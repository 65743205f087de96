//! Ancestor selection.
//!
//! Multinomial resampling draws `N` i.i.d. indices from `w / W` by walking the
//! cumulative weights with uniform order statistics, generated in sorted order
//! from normalised exponential spacings. A uniform `u` selects the first index `i`
//! with `u <= C_i` (ties go to the lower index); zero-weight particles are never
//! selected.

use rand::{Rng, RngExt};
use rand_distr::{Distribution, Exp1};

use crate::scalar::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResamplingScheme {
    #[default]
    Multinomial,
    /// Lower-variance alternatives; the closed-form variances do not apply to them.
    Systematic,
    Stratified,
}

/// Walk the cumulative weights with nondecreasing targets in `(0, total]`.
fn walk<T: Scalar>(weights: &[T], targets: impl Iterator<Item = T>, out: &mut Vec<usize>) {
    let last_positive = weights.iter().rposition(|w| *w > T::zero()).unwrap_or(0);
    let mut i = 0;
    let mut cum = weights[0];
    for u in targets {
        while i < last_positive && (cum < u || weights[i] == T::zero()) {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
    }
}

pub fn multinomial_ancestors<T: Scalar, R: Rng>(
    weights: &[T],
    total: T,
    n: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    let mut spacings = Vec::with_capacity(n);
    let mut acc = 0.0f64;
    for _ in 0..n {
        let e: f64 = Exp1.sample(rng);
        acc += e;
        spacings.push(acc);
    }
    let e: f64 = Exp1.sample(rng);
    let norm = acc + e;
    walk(
        weights,
        spacings.into_iter().map(|s| T::of(s / norm) * total),
        out,
    );
}

pub fn systematic_ancestors<T: Scalar, R: Rng>(
    weights: &[T],
    total: T,
    n: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    let u: f64 = rng.random();
    let nf = n as f64;
    walk(weights, (0..n).map(|i| T::of((i as f64 + u) / nf) * total), out);
}

pub fn stratified_ancestors<T: Scalar, R: Rng>(
    weights: &[T],
    total: T,
    n: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    let nf = n as f64;
    let targets: Vec<T> = (0..n)
        .map(|i| T::of((i as f64 + rng.random::<f64>()) / nf) * total)
        .collect();
    walk(weights, targets.into_iter(), out);
}

pub fn resample<T: Scalar, R: Rng>(
    scheme: ResamplingScheme,
    weights: &[T],
    total: T,
    n: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    match scheme {
        ResamplingScheme::Multinomial => multinomial_ancestors(weights, total, n, rng, out),
        ResamplingScheme::Systematic => systematic_ancestors(weights, total, n, rng, out),
        ResamplingScheme::Stratified => stratified_ancestors(weights, total, n, rng, out),
    }
}
