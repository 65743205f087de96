use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hmm::DiscreteHmm;
use crate::scalar::prelude::*;

/// `L<y_{k:m}> h` for a finite model: `h` pushed back through `q` then weighted by
/// `g(., y_l)`, for `l = m, m-1, .., k`. An empty segment is the identity.
pub fn unnormalized_kernel_apply_discrete<T: Scalar>(
    model: &DiscreteHmm<T>,
    segment: &[usize],
    h: &DVector<T>,
) -> Result<DVector<T>> {
    if h.len() != model.states() {
        return Err(Error::Dimension(format!(
            "test function has {} entries, model has {} states",
            h.len(),
            model.states()
        )));
    }
    let mut v = h.clone();
    for &y in segment.iter().rev() {
        let g = model.likelihood_column(y)?;
        v = (model.transition() * v).component_mul(&g);
    }
    Ok(v)
}
