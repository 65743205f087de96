//! Named catalog of bounded test functions.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hmm::StateCoordinates;
use crate::scalar::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFunction {
    /// `1{x = state}` on a finite state space.
    Indicator(usize),
    /// The `i`-th coordinate of the state (the state index itself for finite models).
    Coordinate(usize),
    /// `1 / (1 + exp(-x_i / scale))`, bounded in `(0, 1)`.
    BoundedSigmoid { index: usize, scale: f64 },
    Constant(f64),
}

impl TestFunction {
    pub fn eval<T: Scalar, S: StateCoordinates<T>>(&self, x: &S) -> T {
        match *self {
            TestFunction::Indicator(s) => {
                if x.discrete_index() == Some(s) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            TestFunction::Coordinate(i) => x.coord(i).unwrap_or_else(T::nan_value),
            TestFunction::BoundedSigmoid { index, scale } => {
                let v = x.coord(index).unwrap_or_else(T::nan_value);
                T::one() / (T::one() + (-v / T::of(scale)).exp())
            }
            TestFunction::Constant(c) => T::of(c),
        }
    }

    /// Values on the states `0..m` of a finite model.
    pub fn on_states<T: Scalar>(&self, m: usize) -> DVector<T> {
        DVector::from_fn(m, |x, _| self.eval::<T, usize>(&x))
    }

    pub fn requires_finite_states(&self) -> bool {
        matches!(self, TestFunction::Indicator(_))
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Indicator(s) => write!(f, "indicator({s})"),
            TestFunction::Coordinate(i) => write!(f, "coordinate({i})"),
            TestFunction::BoundedSigmoid { index, scale } => write!(f, "bounded-sigmoid({index},{scale})"),
            TestFunction::Constant(c) => write!(f, "constant({c})"),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "unknown test function '{s}'; expected indicator(k), coordinate(i), bounded-sigmoid(i, scale) or constant(c)"
            ))
        };
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = s[..open].trim();
        let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').map(str::trim).collect();
        let index = |a: &str| a.parse::<usize>().map_err(|_| bad());
        let real = |a: &str| a.parse::<f64>().map_err(|_| bad());
        match (name, args.as_slice()) {
            ("indicator", [k]) => Ok(TestFunction::Indicator(index(k)?)),
            ("coordinate", [i]) => Ok(TestFunction::Coordinate(index(i)?)),
            ("bounded-sigmoid", [i, scale]) => {
                let scale = real(scale)?;
                if !(scale > 0.0) {
                    return Err(Error::InvalidArgument(format!("sigmoid scale must be positive, got {scale}")));
                }
                Ok(TestFunction::BoundedSigmoid { index: index(i)?, scale })
            }
            ("constant", [c]) => Ok(TestFunction::Constant(real(c)?)),
            _ => Err(bad()),
        }
    }
}
