//! Small statistical toolkit for the experiments: trend tests, variance
//! envelopes, normality tests and Gaussian moments.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn student_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("valid t").inverse_cdf(p)
}

pub fn chi_squared_quantile(p: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive df").inverse_cdf(p)
}

/// Two-sided `level` interval for the mean square `S = M^-1 sum Z_r^2` of `M`
/// independent `N(0, sigma2)` errors: `[sigma2 chi2_lo / M, sigma2 chi2_hi / M]`.
pub fn chi_squared_envelope(sigma2: f64, dof: usize, level: f64) -> (f64, f64) {
    let a = (1.0 - level) / 2.0;
    let d = dof as f64;
    (
        sigma2 * chi_squared_quantile(a, d) / d,
        sigma2 * chi_squared_quantile(1.0 - a, d) / d,
    )
}

/// Chi-square goodness-of-fit statistic and its upper-tail p-value.
pub fn chi_squared_gof(observed: &[usize], expected: &[f64]) -> (f64, f64) {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let cells = expected.iter().filter(|&&e| e > 0.0).count();
    let p = 1.0 - ChiSquared::new((cells - 1) as f64).expect("df").cdf(stat);
    (stat, p)
}

/// Anderson-Darling statistic of a sample against the fully specified `N(0, 1)`.
pub fn anderson_darling_standard_normal(sample: &[f64]) -> f64 {
    let mut z = sample.to_vec();
    z.sort_by(|a, b| a.total_cmp(b));
    let n = z.len() as f64;
    let phi = Normal::standard();
    let s: f64 = z
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = phi.cdf(x).clamp(1e-300, 1.0 - 1e-16);
            let hi = phi.cdf(z[z.len() - 1 - i]).clamp(1e-300, 1.0 - 1e-16);
            (2.0 * i as f64 + 1.0) * (lo.ln() + (1.0 - hi).ln())
        })
        .sum();
    -n - s / n
}

/// Upper 1% point of the Anderson-Darling statistic for a fully specified null.
pub const ANDERSON_DARLING_CRITICAL_1PCT: f64 = 3.857;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub residual_dof: usize,
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64, Vec<f64>, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let resid = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    (intercept, slope, resid, sxx)
}

/// Ordinary least squares with the classical homoskedastic slope standard error.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let (intercept, slope, resid, sxx) = ols(x, y);
    let dof = x.len().saturating_sub(2);
    let s2 = resid.iter().map(|e| e * e).sum::<f64>() / dof.max(1) as f64;
    LinearFit {
        intercept,
        slope,
        slope_se: if sxx > 0.0 { (s2 / sxx).sqrt() } else { 0.0 },
        residual_dof: dof,
    }
}

/// OLS with the HC1 sandwich standard error for the slope.
pub fn robust_linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    hac_linear_fit(x, y, 0)
}

/// OLS with a Newey-West sandwich standard error: Bartlett weights up to `lags`,
/// plus the HC1 small-sample factor. `lags = 0` is plain HC1.
pub fn hac_linear_fit(x: &[f64], y: &[f64], lags: usize) -> LinearFit {
    let (intercept, slope, resid, sxx) = ols(x, y);
    let n = x.len();
    let mx = mean(x);
    let u: Vec<f64> = x.iter().zip(&resid).map(|(a, e)| (a - mx) * e).collect();
    let mut meat: f64 = u.iter().map(|v| v * v).sum();
    for l in 1..=lags.min(n.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let gamma: f64 = u[l..].iter().zip(&u[..n - l]).map(|(a, b)| a * b).sum();
        meat += 2.0 * w * gamma;
    }
    let correction = if n > 2 { n as f64 / (n - 2) as f64 } else { 1.0 };
    let var = if sxx > 0.0 { (correction * meat / (sxx * sxx)).max(0.0) } else { 0.0 };
    LinearFit {
        intercept,
        slope,
        slope_se: var.sqrt(),
        residual_dof: n.saturating_sub(2),
    }
}

/// Bartlett bandwidth `floor(n^{1/3})` used by the trend test.
pub fn trend_lags(n: usize) -> usize {
    (n as f64).cbrt().floor() as usize
}

/// Result of the two-part trend diagnostic on a time-indexed series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrendTest {
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `max(second half) / median(first half)`.
    pub half_ratio: f64,
    pub confidence: f64,
    pub max_half_ratio: f64,
    pub pass: bool,
}

pub const DEFAULT_TREND_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_MAX_HALF_RATIO: f64 = 3.0;

/// Minimum series length accepted by [`trend_test`].
pub const MIN_TREND_LENGTH: usize = 20;

/// Trend test with the default 95% robust interval and half-ratio threshold 3.
pub fn trend_test(series: &[f64]) -> Result<TrendTest> {
    trend_test_with(series, DEFAULT_TREND_CONFIDENCE, DEFAULT_MAX_HALF_RATIO)
}

/// Passes when the robust slope interval reaches down to zero or below and the
/// half ratio stays within `max_half_ratio`. The interval is autocorrelation
/// robust (Newey-West, [`trend_lags`]) because neighbouring entries of a variance
/// series share replicates.
pub fn trend_test_with(series: &[f64], confidence: f64, max_half_ratio: f64) -> Result<TrendTest> {
    if series.len() < MIN_TREND_LENGTH {
        return Err(Error::InvalidArgument(format!(
            "trend test needs at least {MIN_TREND_LENGTH} points, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("trend test series has non-finite entries".into()));
    }
    let t: Vec<f64> = (0..series.len()).map(|i| i as f64).collect();
    let fit = hac_linear_fit(&t, series, trend_lags(series.len()));
    let z = normal_quantile(0.5 + confidence / 2.0);
    let (ci_low, ci_high) = (fit.slope - z * fit.slope_se, fit.slope + z * fit.slope_se);
    let half = series.len() / 2;
    let first_median = median(&series[..half]);
    let second_max = series[half..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half_ratio = if second_max == first_median {
        1.0
    } else if first_median > 0.0 {
        second_max / first_median
    } else {
        f64::INFINITY
    };
    Ok(TrendTest {
        slope: fit.slope,
        ci_low,
        ci_high,
        half_ratio,
        confidence,
        max_half_ratio,
        pass: ci_low <= 0.0 && half_ratio <= max_half_ratio,
    })
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

/// `E|Z|^p` for standard normal `Z`, by quadrature of `2 z^p phi(z)` on `[0, 40]`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let f = move |z: f64| if z == 0.0 && p == 0.0 { c } else { c * z.powf(p) * (-0.5 * z * z).exp() };
    // split at the mode sqrt(p) so the peak is resolved
    let mid = p.sqrt().max(1.0);
    adaptive_simpson(&f, 0.0, mid, 1e-12) + adaptive_simpson(&f, mid, 40.0, 1e-12)
}

/// Closed form `2^{p/2} Gamma((p+1)/2) / sqrt(pi)` of the same moment.
pub fn gaussian_abs_moment_closed_form(p: f64) -> f64 {
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::seed::{Purpose, SeedStream, SeedTags};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn increasing_line_fails() {
        let s: Vec<f64> = (0..100).map(|i| 1.0 + 0.1 * i as f64).collect();
        let t = trend_test(&s).unwrap();
        assert!(t.ci_low > 0.0);
        assert!(!t.pass);
    }

    #[test]
    fn constant_series_passes() {
        let t = trend_test(&[2.5; 40]).unwrap();
        assert_eq!(t.slope, 0.0);
        assert_eq!(t.half_ratio, 1.0);
        assert!(t.pass);
    }

    #[test]
    fn short_series_rejected() {
        assert!(trend_test(&[1.0; 19]).is_err());
    }

    #[test]
    fn noise_passes_at_least_95_percent_of_the_time() {
        let stream = SeedStream::new(2024);
        let passes = (0..100)
            .filter(|&rep| {
                let mut rng = stream.derive(SeedTags::new(Purpose::Calibration, rep, 0));
                let s: Vec<f64> = (0..200)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        1.0 + 0.2 * z
                    })
                    .collect();
                trend_test(&s).unwrap().pass
            })
            .count();
        assert!(passes >= 95, "{passes} of 100");
    }

    #[test]
    fn gaussian_moments() {
        assert!((gaussian_abs_moment(2.0) - 1.0).abs() < 1e-10);
        assert!((gaussian_abs_moment(1.0) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-10);
        for p in [0.5, 1.5, 3.0, 4.0] {
            assert!((gaussian_abs_moment(p) - gaussian_abs_moment_closed_form(p)).abs() < 1e-10);
        }
        assert!((gaussian_abs_moment(4.0) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn envelope_brackets_sigma() {
        let (lo, hi) = chi_squared_envelope(2.0, 10_000, 0.99);
        assert!(lo < 2.0 && hi > 2.0);
        assert!((hi / 2.0 - 1.0) < 0.04);
    }

    #[test]
    fn anderson_darling_accepts_normal_rejects_shifted() {
        let mut rng = SeedStream::new(5).derive(SeedTags::new(Purpose::Calibration, 0, 0));
        let z: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(anderson_darling_standard_normal(&z) < ANDERSON_DARLING_CRITICAL_1PCT);
        let shifted: Vec<f64> = z.iter().map(|v| v + 0.3).collect();
        assert!(anderson_darling_standard_normal(&shifted) > ANDERSON_DARLING_CRITICAL_1PCT);
    }

    #[test]
    fn robust_and_classical_fits_agree_on_slope() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v + (v * 1.3).sin()).collect();
        assert_eq!(linear_fit(&x, &y).slope, robust_linear_fit(&x, &y).slope);
        assert!((linear_fit(&x, &y).slope + 0.5).abs() < 0.05);
    }

    #[test]
    fn hac_widens_interval_for_persistent_noise() {
        let mut rng = SeedStream::new(9).derive(SeedTags::new(Purpose::Calibration, 0, 0));
        let mut z = 0.0;
        let y: Vec<f64> = (0..2000)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                z = 0.9 * z + e;
                z
            })
            .collect();
        let x: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
        let white = robust_linear_fit(&x, &y).slope_se;
        let hac = hac_linear_fit(&x, &y, trend_lags(y.len())).slope_se;
        assert!(hac > 2.0 * white);
    }
}
