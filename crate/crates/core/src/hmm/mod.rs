//! Model representations, simulation and observation streams.

pub mod discrete;
pub mod generic;
pub mod linear_gaussian;
pub mod model;
pub mod source;

use nalgebra::DVector;

use crate::scalar::prelude::*;

pub use discrete::DiscreteHmm;
pub use generic::{ArchParams, GenericHmm};
pub use linear_gaussian::LinearGaussianModel;
pub use model::{local_likelihood, simulate_hmm, StateSpaceModel, Trajectory};
pub use source::{stationary_observation_stream, ObsMap, ObservationSource, ObservationValue};

/// Coordinate view of a state, used by the test-function catalog and grid checks.
pub trait StateCoordinates<T> {
    fn dim(&self) -> usize;
    fn coord(&self, i: usize) -> Option<T>;
    /// Index of the state when the state space is finite.
    fn discrete_index(&self) -> Option<usize> {
        None
    }
}

/// States that can be built from a point of `R^d`.
pub trait FromCoordinates<T>: Sized {
    fn from_coords(c: &[T]) -> Self;
}

impl<T: Scalar> StateCoordinates<T> for usize {
    fn dim(&self) -> usize {
        1
    }
    fn coord(&self, i: usize) -> Option<T> {
        (i == 0).then(|| T::of_usize(*self))
    }
    fn discrete_index(&self) -> Option<usize> {
        Some(*self)
    }
}

impl<T: Scalar> StateCoordinates<T> for DVector<T> {
    fn dim(&self) -> usize {
        self.len()
    }
    fn coord(&self, i: usize) -> Option<T> {
        self.get(i).copied()
    }
}

impl<T: Scalar> FromCoordinates<T> for DVector<T> {
    fn from_coords(c: &[T]) -> Self {
        DVector::from_column_slice(c)
    }
}

macro_rules! scalar_state {
    ($t:ty) => {
        impl StateCoordinates<$t> for $t {
            fn dim(&self) -> usize {
                1
            }
            fn coord(&self, i: usize) -> Option<$t> {
                (i == 0).then_some(*self)
            }
        }

        impl FromCoordinates<$t> for $t {
            fn from_coords(c: &[$t]) -> Self {
                c[0]
            }
        }
    };
}

scalar_state!(f64);
scalar_state!(f32);
