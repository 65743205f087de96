//! Finite-state, finite-alphabet hidden Markov models.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};

use super::model::StateSpaceModel;
use crate::error::{Error, Result};
use crate::scalar::prelude::*;

/// Hidden Markov model on `{0..m}` observed through symbols `{0..k}`.
///
/// `transition[(x, x')] = q(x, x')`, `emission[(x, y)] = g(x, y)` and `initial[x] = chi(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteHmm<T: Scalar> {
    transition: DMatrix<T>,
    emission: DMatrix<T>,
    log_emission: DMatrix<T>,
    initial: DVector<T>,
    transition_cdf: Vec<Vec<T>>,
    emission_cdf: Vec<Vec<T>>,
    initial_cdf: Vec<T>,
}

fn tolerance<T: Scalar>(m: usize) -> T {
    let eps = T::epsilon() * T::of_usize(16 * m.max(1));
    if eps > T::of(1e-12) {
        eps
    } else {
        T::of(1e-12)
    }
}

fn cumulative<T: Scalar>(p: impl Iterator<Item = T>) -> Vec<T> {
    let mut acc = T::zero();
    p.map(|v| {
        acc += v;
        acc
    })
    .collect()
}

/// First index whose cumulative mass exceeds `u`; zero-mass entries are never returned.
fn invert_cdf<T: Scalar>(cdf: &[T], u: T) -> usize {
    let idx = cdf.partition_point(|&c| c <= u);
    if idx < cdf.len() {
        return idx;
    }
    // u landed above a total that rounded below one: take the last positive entry
    let mut i = cdf.len() - 1;
    while i > 0 && cdf[i] == cdf[i - 1] {
        i -= 1;
    }
    i
}

impl<T: Scalar> DiscreteHmm<T> {
    pub fn new(transition: DMatrix<T>, emission: DMatrix<T>, initial: DVector<T>) -> Result<Self> {
        let m = transition.nrows();
        if m == 0 {
            return Err(Error::Dimension("state space must be nonempty".into()));
        }
        if transition.ncols() != m {
            return Err(Error::Dimension(format!(
                "transition matrix is {}x{}, expected square",
                m,
                transition.ncols()
            )));
        }
        if emission.nrows() != m {
            return Err(Error::Dimension(format!(
                "emission matrix has {} rows, expected {m}",
                emission.nrows()
            )));
        }
        if emission.ncols() == 0 {
            return Err(Error::Dimension("observation alphabet must be nonempty".into()));
        }
        if initial.len() != m {
            return Err(Error::Dimension(format!(
                "initial distribution has length {}, expected {m}",
                initial.len()
            )));
        }
        let transition_cdf = transition
            .row_iter()
            .map(|row| cumulative(row.iter().copied()))
            .collect();
        let emission_cdf = emission
            .row_iter()
            .map(|row| {
                let total = row.sum();
                cumulative(row.iter().map(|&g| g / total))
            })
            .collect();
        let initial_cdf = cumulative(initial.iter().copied());
        let log_emission = emission.map(|g| g.ln());
        let model = DiscreteHmm {
            transition,
            emission,
            log_emission,
            initial,
            transition_cdf,
            emission_cdf,
            initial_cdf,
        };
        model.check()?;
        Ok(model)
    }

    /// Build from row-major nested vectors.
    pub fn from_rows(transition: &[Vec<T>], emission: &[Vec<T>], initial: &[T]) -> Result<Self> {
        Self::new(
            matrix_from_rows(transition, "transition")?,
            matrix_from_rows(emission, "emission")?,
            DVector::from_column_slice(initial),
        )
    }

    fn check(&self) -> Result<()> {
        let tol = tolerance::<T>(self.states());
        let nonneg = |v: &T| *v >= T::zero() && v.is_finite_value();
        if !self.transition.iter().all(nonneg) {
            return Err(Error::InvalidModel("transition matrix has a negative or non-finite entry".into()));
        }
        if !self.emission.iter().all(nonneg) {
            return Err(Error::InvalidModel("emission matrix has a negative or non-finite entry".into()));
        }
        if !self.initial.iter().all(nonneg) {
            return Err(Error::InvalidModel("initial distribution has a negative or non-finite entry".into()));
        }
        for (i, row) in self.transition.row_iter().enumerate() {
            let s: T = row.sum();
            if (s - T::one()).absolute() > tol {
                return Err(Error::InvalidModel(format!("transition row {i} sums to {s}, not 1")));
            }
        }
        let s = self.initial.sum();
        if (s - T::one()).absolute() > tol {
            return Err(Error::InvalidModel(format!("initial distribution sums to {s}, not 1")));
        }
        for (x, row) in self.emission.row_iter().enumerate() {
            if row.iter().all(|v| *v == T::zero()) {
                return Err(Error::InvalidModel(format!("emission row {x} is identically zero")));
            }
        }
        for (y, col) in self.emission.column_iter().enumerate() {
            if col.iter().all(|v| *v == T::zero()) {
                return Err(Error::InvalidModel(format!(
                    "emission column {y} is identically zero; g must be positive on used symbols"
                )));
            }
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.transition.nrows()
    }

    pub fn symbols(&self) -> usize {
        self.emission.ncols()
    }

    pub fn transition(&self) -> &DMatrix<T> {
        &self.transition
    }

    pub fn emission(&self) -> &DMatrix<T> {
        &self.emission
    }

    pub fn initial(&self) -> &DVector<T> {
        &self.initial
    }

    /// Same dynamics, different initial law.
    pub fn with_initial(&self, initial: DVector<T>) -> Result<Self> {
        Self::new(self.transition.clone(), self.emission.clone(), initial)
    }

    /// The column `g(., y)` as a vector over states.
    pub fn likelihood_column(&self, y: usize) -> Result<DVector<T>> {
        self.check_symbol(y)?;
        Ok(self.emission.column(y).into_owned())
    }

    pub fn check_symbol(&self, y: usize) -> Result<()> {
        if y >= self.symbols() {
            return Err(Error::InvalidArgument(format!(
                "observation {y} outside alphabet 0..{}",
                self.symbols()
            )));
        }
        Ok(())
    }

    /// Stationary law of the transition matrix by power iteration on `pi q`.
    pub fn stationary_distribution(&self, max_iter: usize) -> DVector<T> {
        let qt = self.transition.transpose();
        let mut pi = DVector::from_element(self.states(), T::one() / T::of_usize(self.states()));
        for _ in 0..max_iter {
            let next = &qt * &pi;
            let diff = (&next - &pi).amax();
            pi = next;
            if diff < T::epsilon() {
                break;
            }
        }
        let s = pi.sum();
        pi / s
    }
}

pub(crate) fn matrix_from_rows<T: Scalar>(rows: &[Vec<T>], what: &str) -> Result<DMatrix<T>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "{what} row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl<T: Scalar> StateSpaceModel for DiscreteHmm<T> {
    type Scalar = T;
    type State = usize;
    type Obs = usize;

    fn validate(&self) -> Result<()> {
        self.check()
    }

    fn validate_observation(&self, y: &usize) -> Result<()> {
        self.check_symbol(*y)
    }

    fn sample_initial<R: Rng>(&self, rng: &mut R) -> usize {
        invert_cdf(&self.initial_cdf, T::of(rng.random::<f64>()))
    }

    fn sample_transition<R: Rng>(&self, x: &usize, rng: &mut R) -> usize {
        invert_cdf(&self.transition_cdf[*x], T::of(rng.random::<f64>()))
    }

    fn sample_observation<R: Rng>(&self, x: &usize, rng: &mut R) -> usize {
        invert_cdf(&self.emission_cdf[*x], T::of(rng.random::<f64>()))
    }

    fn log_obs_density(&self, x: &usize, y: &usize) -> T {
        self.log_emission[(*x, *y)]
    }

    fn obs_density(&self, x: &usize, y: &usize) -> T {
        self.emission[(*x, *y)]
    }
}
