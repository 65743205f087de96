//! Grid bounds on the transition density over a product set `C x C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::linear_gaussian::LinearGaussianModel;
use crate::hmm::{FromCoordinates, GenericHmm, StateSpaceModel};
use crate::scalar::prelude::*;

/// Models whose transition kernel may have a Lebesgue density `q(x, x')`.
pub trait TransitionDensity: StateSpaceModel {
    /// `q(x, x')`, or `None` when the model provides no density.
    fn transition_density(&self, x: &Self::State, x_next: &Self::State) -> Option<Self::Scalar>;
}

impl<T, S, O> TransitionDensity for GenericHmm<T, S, O>
where
    T: Scalar,
    S: Clone + std::fmt::Debug + Send + Sync,
    O: Clone + std::fmt::Debug + Send + Sync,
{
    fn transition_density(&self, x: &S, x_next: &S) -> Option<T> {
        self.transition_density.as_ref().map(|q| q(x, x_next))
    }
}

impl<T: Scalar> TransitionDensity for LinearGaussianModel<T> {
    fn transition_density(&self, x: &Self::State, x_next: &Self::State) -> Option<T> {
        self.transition_log_density(x, x_next).map(|v| v.exp())
    }
}

/// Axis-aligned box `[lower_i, upper_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperRectangle {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl HyperRectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let r = HyperRectangle { lower, upper };
        r.validate()?;
        Ok(r)
    }

    /// The cube `[-half_width, half_width]^dim`.
    pub fn centered(dim: usize, half_width: f64) -> Self {
        HyperRectangle {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::Dimension(format!(
                "box bounds have lengths {} and {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u))
        {
            return Err(Error::InvalidArgument(format!(
                "box bounds must be finite with lower <= upper: {:?} / {:?}",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }

    /// Tensor grid with `points` equally spaced nodes per axis, endpoints included.
    /// Refining `g -> 2g - 1` keeps every old node.
    pub fn grid(&self, points: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| {
                if points <= 1 {
                    vec![0.5 * (l + u)]
                } else {
                    (0..points).map(|i| l + (u - l) * i as f64 / (points - 1) as f64).collect()
                }
            })
            .collect();
        let mut out = vec![Vec::with_capacity(self.dim())];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// Grid extremes of `q` on `C x C`.
///
/// Both bounds are one-sided: `eps_minus` is at least the true infimum and
/// `eps_plus` at most the true supremum; refining the grid moves them toward the
/// true values monotonically.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoeblinCertificate {
    pub set: HyperRectangle,
    pub grid_points: usize,
    pub evaluations: usize,
    pub eps_minus: f64,
    pub eps_plus: f64,
    /// `eps_minus / eps_plus`.
    pub ratio: f64,
    pub argmin: (Vec<f64>, Vec<f64>),
    pub argmax: (Vec<f64>, Vec<f64>),
}

pub fn local_doeblin_constants<M>(model: &M, set: &HyperRectangle, grid_points: usize) -> Result<DoeblinCertificate>
where
    M: TransitionDensity,
    M::State: FromCoordinates<M::Scalar>,
{
    set.validate()?;
    if grid_points < 2 {
        return Err(Error::InvalidArgument("need at least 2 grid points per axis".into()));
    }
    let nodes = set.grid(grid_points);
    let states: Vec<M::State> = nodes
        .iter()
        .map(|p| M::State::from_coords(&p.iter().map(|&v| M::Scalar::of(v)).collect::<Vec<_>>()))
        .collect();
    let mut lo = (f64::INFINITY, 0, 0);
    let mut hi = (f64::NEG_INFINITY, 0, 0);
    for (i, x) in states.iter().enumerate() {
        for (j, x_next) in states.iter().enumerate() {
            let q = model
                .transition_density(x, x_next)
                .ok_or_else(|| Error::InvalidArgument("the model has no transition density".into()))?
                .to_f64_lossy();
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::ModelViolation(format!(
                    "transition density is {q} at ({:?}, {:?}); it must be positive and finite on C x C",
                    nodes[i], nodes[j]
                )));
            }
            if q < lo.0 {
                lo = (q, i, j);
            }
            if q > hi.0 {
                hi = (q, i, j);
            }
        }
    }
    Ok(DoeblinCertificate {
        set: set.clone(),
        grid_points,
        evaluations: states.len() * states.len(),
        eps_minus: lo.0,
        eps_plus: hi.0,
        ratio: lo.0 / hi.0,
        argmin: (nodes[lo.1].clone(), nodes[lo.2].clone()),
        argmax: (nodes[hi.1].clone(), nodes[hi.2].clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn phi(z: f64) -> f64 {
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn random_walk_extremes_at_corner_and_diagonal() {
        let m = GenericHmm::<f64, f64, f64>::gaussian_random_walk(1.0, 1.0, 1.0);
        let c = local_doeblin_constants(&m, &HyperRectangle::centered(1, 1.0), 5).unwrap();
        assert!((c.eps_minus - phi(2.0)).abs() < 1e-14);
        assert!((c.eps_plus - phi(0.0)).abs() < 1e-14);
    }

    #[test]
    fn flat_density_has_unit_ratio() {
        let mut m = GenericHmm::<f64, f64, f64>::gaussian_random_walk(1.0, 1.0, 1.0);
        m.transition_density = Some(Arc::new(|_, _| 0.25));
        let c = local_doeblin_constants(&m, &HyperRectangle::centered(1, 2.0), 4).unwrap();
        assert_eq!(c.eps_minus, c.eps_plus);
        assert_eq!(c.ratio, 1.0);
    }

    #[test]
    fn vanishing_density_is_a_violation() {
        let mut m = GenericHmm::<f64, f64, f64>::gaussian_random_walk(1.0, 1.0, 1.0);
        m.transition_density = Some(Arc::new(|x: &f64, _: &f64| if *x > 0.5 { 0.0 } else { 1.0 }));
        let err = local_doeblin_constants(&m, &HyperRectangle::centered(1, 1.0), 3).unwrap_err();
        assert!(matches!(err, Error::ModelViolation(_)));
    }

    #[test]
    fn refined_grid_keeps_old_nodes() {
        let r = HyperRectangle::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let coarse = r.grid(3);
        let fine = r.grid(5);
        assert_eq!(coarse.len(), 9);
        assert!(coarse.iter().all(|p| fine.contains(p)));
    }
}
