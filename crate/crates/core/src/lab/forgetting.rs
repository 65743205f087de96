//! Exact forgetting of the initial law by the predictor.

use nalgebra::DVector;
use serde::Serialize;

use super::stats::{linear_fit, student_quantile, LinearFit};
use crate::error::Result;
use crate::exact::forward_filter_discrete;
use crate::hmm::DiscreteHmm;
use crate::scalar::prelude::*;

/// Total-variation gaps below this are rounding noise and end the fitted range.
pub const GAP_FLOOR: f64 = 1e-13;

pub const FORGETTING_CONFIDENCE: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForgettingReport {
    /// Total variation between the two predictors, `k = 0..=n`.
    #[serde(skip)]
    pub tv_gap: Vec<f64>,
    /// `|ln l_a,k - ln l_b,k|`, `k = 0..n`.
    #[serde(skip)]
    pub loglik_gap: Vec<f64>,
    /// Whether every transition probability is positive.
    pub mixing_ok: bool,
    /// Fit of `ln tv_gap[k]` on `k` over the leading entries above [`GAP_FLOOR`].
    pub fit: Option<LinearFit>,
    pub fit_points: usize,
    pub rate: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub confidence: f64,
    /// The gap is zero for every `k >= 1`.
    pub vanishes: bool,
    pub pass: bool,
}

pub fn forgetting_experiment<T: Scalar>(
    model: &DiscreteHmm<T>,
    y: &[usize],
    chi_a: &DVector<T>,
    chi_b: &DVector<T>,
) -> Result<ForgettingReport> {
    let a = forward_filter_discrete(&model.with_initial(chi_a.clone())?, y)?;
    let b = forward_filter_discrete(&model.with_initial(chi_b.clone())?, y)?;
    let tv_gap: Vec<f64> = a
        .predictors
        .iter()
        .zip(&b.predictors)
        .map(|(p, q)| 0.5 * (p - q).iter().map(|d| d.to_f64_lossy().abs()).sum::<f64>())
        .collect();
    let loglik_gap = a
        .step_densities
        .iter()
        .zip(&b.step_densities)
        .map(|(la, lb)| (la.to_f64_lossy().ln() - lb.to_f64_lossy().ln()).abs())
        .collect();
    let mixing_ok = model.transition().iter().all(|&v| v > T::zero());
    let vanishes = tv_gap.iter().skip(1).all(|&v| v == 0.0);

    let fit_points = tv_gap.iter().take_while(|&&v| v > GAP_FLOOR).count();
    let (fit, rate, ci_low, ci_high) = if fit_points >= 3 {
        let k: Vec<f64> = (0..fit_points).map(|i| i as f64).collect();
        let lg: Vec<f64> = tv_gap[..fit_points].iter().map(|v| v.ln()).collect();
        let fit = linear_fit(&k, &lg);
        let t = student_quantile(0.5 + FORGETTING_CONFIDENCE / 2.0, fit.residual_dof.max(1) as f64);
        let (lo, hi) = (fit.slope - t * fit.slope_se, fit.slope + t * fit.slope_se);
        (Some(fit), Some(fit.slope), Some(lo), Some(hi))
    } else {
        (None, None, None, None)
    };
    let pass = vanishes || ci_high.is_some_and(|h| h < 0.0);
    Ok(ForgettingReport {
        tv_gap,
        loglik_gap,
        mixing_ok,
        fit,
        fit_points,
        rate,
        ci_low,
        ci_high,
        confidence: FORGETTING_CONFIDENCE,
        vanishes,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(q: [[f64; 2]; 2]) -> DiscreteHmm<f64> {
        DiscreteHmm::from_rows(
            &[q[0].to_vec(), q[1].to_vec()],
            &[vec![0.8, 0.2], vec![0.3, 0.7]],
            &[0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn equal_initials_have_no_gap() {
        let m = model([[0.9, 0.1], [0.2, 0.8]]);
        let chi = DVector::from_vec(vec![0.3, 0.7]);
        let r = forgetting_experiment(&m, &[0, 1, 1, 0], &chi, &chi).unwrap();
        assert!(r.tv_gap.iter().chain(&r.loglik_gap).all(|&v| v == 0.0));
        assert!(r.vanishes && r.pass);
    }

    #[test]
    fn identical_rows_forget_in_one_step() {
        let m = model([[0.4, 0.6], [0.4, 0.6]]);
        let r = forgetting_experiment(
            &m,
            &[0, 1, 1, 0, 0],
            &DVector::from_vec(vec![0.99, 0.01]),
            &DVector::from_vec(vec![0.01, 0.99]),
        )
        .unwrap();
        assert!(r.tv_gap[0] > 0.9);
        assert!(r.vanishes);
    }
}
