//! Numerical evidence for the stability assumptions on a concrete model.
//!
//! Each check reports `pass`, `fail` or `not-checkable` together with the numbers
//! it was decided on. A check whose inputs are missing (no set configured, no
//! transition density) is reported as `not-checkable`, never as a pass.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use super::doeblin::{HyperRectangle, TransitionDensity};
use super::lgss::lgss_structure;
use crate::error::{Error, Result};
use crate::hmm::{FromCoordinates, GenericHmm, LinearGaussianModel, StateCoordinates};
use crate::io::seed::{Purpose, SeedStream, SeedTags};
use crate::scalar::prelude::*;

/// Required probability of an observation block falling in `K`.
pub const BLOCK_FREQUENCY_TARGET: f64 = 2.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotCheckable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    pub values: BTreeMap<String, f64>,
}

impl CheckEntry {
    fn new(name: &str, status: CheckStatus, detail: impl Into<String>) -> Self {
        CheckEntry {
            name: name.to_string(),
            status,
            detail: detail.into(),
            values: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<CheckEntry>,
}

impl AssumptionReport {
    /// `Fail` if any check failed, else `NotCheckable` if any was, else `Pass`.
    pub fn overall(&self) -> CheckStatus {
        if self.checks.iter().any(|c| c.status == CheckStatus::Fail) {
            CheckStatus::Fail
        } else if self.checks.iter().any(|c| c.status == CheckStatus::NotCheckable) {
            CheckStatus::NotCheckable
        } else {
            CheckStatus::Pass
        }
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A set of single observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ObsSet {
    All,
    Symbols { symbols: Vec<usize> },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl ObsSet {
    pub fn contains<T: Scalar, O: StateCoordinates<T>>(&self, y: &O) -> bool {
        match self {
            ObsSet::All => true,
            ObsSet::Symbols { symbols } => y.discrete_index().is_some_and(|s| symbols.contains(&s)),
            ObsSet::Box { lower, upper } => {
                y.dim() == lower.len()
                    && (0..lower.len()).all(|i| {
                        y.coord(i)
                            .map(|v| v.to_f64_lossy())
                            .is_some_and(|v| lower[i] <= v && v <= upper[i])
                    })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyCheck {
    /// `K` for single observations; a block is in `K` when all its entries are.
    pub set: ObsSet,
    pub block_len: usize,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailCheck {
    /// Inner region where the supremum of `g(., y)` is sought.
    pub inner: HyperRectangle,
    /// The shells are the boundaries of `inner` scaled by `shell_scale`, twice and four times that.
    pub shell_scale: f64,
    pub grid_points: usize,
    pub eta: f64,
    pub max_observations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftCheck {
    /// `D_0, ..., D_r`.
    pub sets: Vec<HyperRectangle>,
    pub grid_points: usize,
    /// Simpson nodes per axis when integrating `q(x, .)` over `D_u`.
    pub quad_points: usize,
    /// Transitions per grid point when no density is available.
    pub mc_samples: usize,
    pub delta: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssumptionConfig {
    pub frequency: Option<FrequencyCheck>,
    pub tail: Option<TailCheck>,
    pub drift: Option<DriftCheck>,
    pub lgss_r_max: Option<usize>,
}

/// Continuous-state models the checks can be run on.
pub trait AssumptionModel: TransitionDensity {
    fn as_lgss(&self) -> Option<&LinearGaussianModel<Self::Scalar>> {
        None
    }
}

impl<T, S, O> AssumptionModel for GenericHmm<T, S, O>
where
    T: Scalar,
    S: Clone + std::fmt::Debug + Send + Sync,
    O: Clone + std::fmt::Debug + Send + Sync,
{
}

impl<T: Scalar> AssumptionModel for LinearGaussianModel<T> {
    fn as_lgss(&self) -> Option<&LinearGaussianModel<T>> {
        Some(self)
    }
}

/// One-sided Clopper-Pearson lower bound for a binomial proportion.
pub fn clopper_pearson_lower(successes: usize, trials: usize, confidence: f64) -> f64 {
    if successes == 0 || trials == 0 {
        return 0.0;
    }
    let alpha = 1.0 - confidence;
    if successes == trials {
        return alpha.powf(1.0 / trials as f64);
    }
    Beta::new(successes as f64, (trials - successes + 1) as f64)
        .expect("positive shape parameters")
        .inverse_cdf(alpha)
}

/// Frequency of non-overlapping observation blocks in `K` against 2/3.
pub fn frequency_check<T: Scalar, O: StateCoordinates<T>>(obs: &[O], check: &FrequencyCheck) -> CheckEntry {
    const NAME: &str = "block-frequency";
    let r = check.block_len.max(1);
    let blocks = obs.len() / r;
    if blocks == 0 {
        return CheckEntry::new(NAME, CheckStatus::NotCheckable, format!("fewer than {r} observations"));
    }
    let hits = obs
        .chunks_exact(r)
        .filter(|b| b.iter().all(|y| check.set.contains::<T, O>(y)))
        .count();
    let lower = clopper_pearson_lower(hits, blocks, check.confidence);
    let status = if lower > BLOCK_FREQUENCY_TARGET {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    CheckEntry::new(
        NAME,
        status,
        format!("{hits} of {blocks} blocks of length {r} in K; one-sided lower bound vs 2/3"),
    )
    .with("frequency", hits as f64 / blocks as f64)
    .with("lower_bound", lower)
    .with("confidence", check.confidence)
    .with("target", BLOCK_FREQUENCY_TARGET)
}

fn to_state<M>(p: &[f64]) -> M::State
where
    M: AssumptionModel,
    M::State: FromCoordinates<M::Scalar>,
{
    M::State::from_coords(&p.iter().map(|&v| M::Scalar::of(v)).collect::<Vec<_>>())
}

fn shell_points(inner: &HyperRectangle, scale: f64, points: usize) -> Vec<Vec<f64>> {
    let scaled = HyperRectangle {
        lower: inner.lower.iter().map(|v| v * scale).collect(),
        upper: inner.upper.iter().map(|v| v * scale).collect(),
    };
    scaled
        .grid(points)
        .into_iter()
        .filter(|p| {
            p.iter()
                .zip(scaled.lower.iter().zip(&scaled.upper))
                .any(|(v, (l, u))| v == l || v == u)
        })
        .collect()
}

fn tail_check<M>(model: &M, obs: &[M::Obs], set: &ObsSet, check: &TailCheck) -> Result<CheckEntry>
where
    M: AssumptionModel,
    M::State: FromCoordinates<M::Scalar>,
    M::Obs: StateCoordinates<M::Scalar>,
{
    const NAME: &str = "likelihood-tail";
    check.inner.validate()?;
    let ys: Vec<&M::Obs> = obs
        .iter()
        .filter(|y| set.contains::<M::Scalar, M::Obs>(*y))
        .take(check.max_observations)
        .collect();
    if ys.is_empty() {
        return Ok(CheckEntry::new(NAME, CheckStatus::NotCheckable, "no observation in K"));
    }
    let inner: Vec<M::State> = check.inner.grid(check.grid_points).iter().map(|p| to_state::<M>(p)).collect();
    let shells: Vec<M::State> = [1.0, 2.0, 4.0]
        .iter()
        .flat_map(|f| shell_points(&check.inner, check.shell_scale * f, check.grid_points))
        .map(|p| to_state::<M>(&p))
        .collect();
    let mut worst = 0.0f64;
    for y in ys.iter() {
        let g = |x: &M::State| model.obs_density(x, y).to_f64_lossy();
        let shell_sup = shells.iter().map(g).fold(0.0, f64::max);
        let sup = inner.iter().map(g).fold(shell_sup, f64::max);
        if !(sup > 0.0) {
            return Ok(CheckEntry::new(NAME, CheckStatus::Fail, "g(., y) vanishes on the whole grid"));
        }
        worst = worst.max(shell_sup / sup);
    }
    let status = if worst < check.eta {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(CheckEntry::new(
        NAME,
        status,
        format!(
            "max over {} observations of sup_shell g / sup g; grid estimate of the supremum",
            ys.len()
        ),
    )
    .with("ratio", worst)
    .with("eta", check.eta)
    .with("shell_scale", check.shell_scale))
}

/// Composite Simpson weights on `points` nodes (made odd) over `[l, u]`.
fn simpson_axis(l: f64, u: f64, points: usize) -> Vec<(f64, f64)> {
    let n = if points % 2 == 0 { points + 1 } else { points.max(3) };
    let h = (u - l) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (l + h * i as f64, w * h / 3.0)
        })
        .collect()
}

fn simpson_nodes(set: &HyperRectangle, points: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for (l, u) in set.lower.iter().zip(&set.upper) {
        let axis = simpson_axis(*l, *u, points);
        out = out
            .into_iter()
            .flat_map(|(p, w)| {
                axis.iter().map(move |&(v, wv)| {
                    let mut q = p.clone();
                    q.push(v);
                    (q, w * wv)
                })
            })
            .collect();
    }
    out
}

fn drift_checks<M>(model: &M, obs: &[M::Obs], check: &DriftCheck) -> Result<Vec<CheckEntry>>
where
    M: AssumptionModel,
    M::State: FromCoordinates<M::Scalar> + StateCoordinates<M::Scalar>,
{
    if check.sets.len() < 2 {
        return Ok(vec![CheckEntry::new(
            "transition-mass",
            CheckStatus::NotCheckable,
            "need sets D_0..D_r with r >= 1",
        )]);
    }
    for s in &check.sets {
        s.validate()?;
    }
    let stream = SeedStream::new(check.seed);
    let mut worst = f64::INFINITY;
    let mut method = "density";
    for u in 1..check.sets.len() {
        let from = check.sets[u - 1].grid(check.grid_points);
        let target = &check.sets[u];
        let nodes: Vec<(M::State, f64)> = simpson_nodes(target, check.quad_points)
            .into_iter()
            .map(|(p, w)| (to_state::<M>(&p), w))
            .collect();
        for (i, p) in from.iter().enumerate() {
            let x = to_state::<M>(p);
            let mass = match model.transition_density(&x, &x) {
                Some(_) => nodes
                    .iter()
                    .map(|(x2, w)| w * model.transition_density(&x, x2).map_or(0.0, |v| v.to_f64_lossy()))
                    .sum::<f64>(),
                None => {
                    method = "monte-carlo";
                    if check.mc_samples == 0 {
                        return Ok(vec![CheckEntry::new(
                            "transition-mass",
                            CheckStatus::NotCheckable,
                            "no transition density and no Monte Carlo samples requested",
                        )]);
                    }
                    let mut rng = stream.derive(SeedTags::new(Purpose::Verify, u as u64, i as u64));
                    let hits = (0..check.mc_samples)
                        .filter(|_| {
                            let x2 = model.sample_transition(&x, &mut rng);
                            let c: Vec<f64> = (0..x2.dim())
                                .map(|k| x2.coord(k).map_or(f64::NAN, |v| v.to_f64_lossy()))
                                .collect();
                            target.contains(&c)
                        })
                        .count();
                    hits as f64 / check.mc_samples as f64
                }
            };
            worst = worst.min(mass);
        }
    }
    let status = if worst >= check.delta {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let mass = CheckEntry::new(
        "transition-mass",
        status,
        format!("grid infimum over D_(u-1) of Q(x, D_u), by {method}"),
    )
    .with("inf_mass", worst)
    .with("delta", check.delta);

    let mut g_min = f64::INFINITY;
    for set in &check.sets {
        for p in set.grid(check.grid_points) {
            let x = to_state::<M>(&p);
            for y in obs {
                g_min = g_min.min(model.obs_density(&x, y).to_f64_lossy());
            }
        }
    }
    let positivity = if obs.is_empty() {
        CheckEntry::new("likelihood-positivity", CheckStatus::NotCheckable, "no observations")
    } else {
        let status = if g_min > 0.0 && g_min.is_finite() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckEntry::new(
            "likelihood-positivity",
            status,
            "grid minimum of g(x, y) over the sets D_u and the observed y",
        )
        .with("min_g", g_min)
    };
    Ok(vec![mass, positivity])
}

pub fn check_assumptions<M>(model: &M, obs: &[M::Obs], config: &AssumptionConfig) -> Result<AssumptionReport>
where
    M: AssumptionModel,
    M::State: FromCoordinates<M::Scalar> + StateCoordinates<M::Scalar>,
    M::Obs: StateCoordinates<M::Scalar>,
{
    let mut checks = Vec::new();
    let set = config.frequency.as_ref().map_or(ObsSet::All, |f| f.set.clone());
    checks.push(match &config.frequency {
        Some(f) => frequency_check::<M::Scalar, M::Obs>(obs, f),
        None => CheckEntry::new("block-frequency", CheckStatus::NotCheckable, "no set K configured"),
    });
    checks.push(match &config.tail {
        Some(t) => tail_check(model, obs, &set, t)?,
        None => CheckEntry::new("likelihood-tail", CheckStatus::NotCheckable, "no tail region configured"),
    });
    match &config.drift {
        Some(d) => checks.extend(drift_checks(model, obs, d)?),
        None => checks.push(CheckEntry::new(
            "transition-mass",
            CheckStatus::NotCheckable,
            "no sets D_u configured",
        )),
    }
    if let Some(lgss) = model.as_lgss() {
        let r_max = config.lgss_r_max.unwrap_or_else(|| 2 * lgss.state_dim().max(1));
        let s = lgss_structure(lgss, r_max)?;
        let status = if s.pass() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        let mut e = CheckEntry::new(
            "lgss-structure",
            status,
            format!(
                "observability and controllability ranks {:?} / {:?}, F_n definite: {}, S full rank: {}",
                s.obs_ranks, s.ctrl_ranks, s.f_positive_definite, s.obs_noise_full_rank
            ),
        )
        .with("r_max", r_max as f64);
        if let Some(r) = s.r_star {
            e = e.with("r_star", r as f64);
        }
        checks.push(e);
    }
    Ok(AssumptionReport { checks })
}

/// Checks that only need the observations, for models without a coordinate state space.
pub fn check_observations<T: Scalar, O: StateCoordinates<T>>(
    obs: &[O],
    config: &AssumptionConfig,
) -> Result<AssumptionReport> {
    if config.tail.is_some() || config.drift.is_some() {
        return Err(Error::InvalidArgument(
            "tail and drift checks need a model with a coordinate state space".into(),
        ));
    }
    let checks = vec![match &config.frequency {
        Some(f) => frequency_check::<T, O>(obs, f),
        None => CheckEntry::new("block-frequency", CheckStatus::NotCheckable, "no set K configured"),
    }];
    Ok(AssumptionReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use statrs::distribution::Normal;

    fn walk() -> GenericHmm<f64, f64, f64> {
        GenericHmm::gaussian_random_walk(1.0, 1.0, 1.0)
    }

    #[test]
    fn full_space_frequency_passes() {
        let obs: Vec<f64> = (0..300).map(|i| (i as f64).sin()).collect();
        let f = FrequencyCheck {
            set: ObsSet::All,
            block_len: 1,
            confidence: 0.95,
        };
        let e = frequency_check::<f64, f64>(&obs, &f);
        assert_eq!(e.status, CheckStatus::Pass);
        assert!(e.values["lower_bound"] > 2.0 / 3.0);
    }

    #[test]
    fn clopper_pearson_matches_known_value() {
        // all successes: alpha^(1/n)
        assert!((clopper_pearson_lower(20, 20, 0.95) - 0.05f64.powf(0.05)).abs() < 1e-15);
        let lb = clopper_pearson_lower(50, 100, 0.95);
        assert!(lb > 0.41 && lb < 0.42);
    }

    #[test]
    fn gaussian_tail_ratio_is_negligible() {
        let m = walk();
        let obs: Vec<f64> = vec![0.0, 1.5, -2.9, 3.0];
        let config = AssumptionConfig {
            frequency: Some(FrequencyCheck {
                set: ObsSet::Box {
                    lower: vec![-3.0],
                    upper: vec![3.0],
                },
                block_len: 1,
                confidence: 0.95,
            }),
            tail: Some(TailCheck {
                inner: HyperRectangle::centered(1, 3.0),
                shell_scale: 10.0,
                grid_points: 61,
                eta: 1e-6,
                max_observations: 100,
            }),
            ..Default::default()
        };
        let r = check_assumptions(&m, &obs, &config).unwrap();
        let t = r.get("likelihood-tail").unwrap();
        assert_eq!(t.status, CheckStatus::Pass);
        assert!(t.values["ratio"] < 1e-6);
        assert_eq!(r.get("transition-mass").unwrap().status, CheckStatus::NotCheckable);
        // four observations cannot certify a frequency above 2/3
        assert_eq!(r.get("block-frequency").unwrap().status, CheckStatus::Fail);
        assert_eq!(r.overall(), CheckStatus::Fail);
    }

    #[test]
    fn random_walk_mass_on_unit_interval() {
        let n = Normal::new(0.0, 1.0).unwrap();
        let exact = n.cdf(0.0) - n.cdf(-2.0);
        let d = DriftCheck {
            sets: vec![HyperRectangle::centered(1, 1.0); 3],
            grid_points: 21,
            quad_points: 101,
            mc_samples: 0,
            delta: 0.4,
            seed: 1,
        };
        let r = check_assumptions(&walk(), &[0.0], &AssumptionConfig { drift: Some(d.clone()), ..Default::default() })
            .unwrap();
        let e = r.get("transition-mass").unwrap();
        assert!((e.values["inf_mass"] / exact - 1.0).abs() < 1e-6);
        assert_eq!(e.status, CheckStatus::Pass);

        let mut no_density = walk();
        no_density.transition_density = None;
        let mc = DriftCheck { mc_samples: 20_000, grid_points: 3, ..d };
        let r = check_assumptions(&no_density, &[0.0], &AssumptionConfig { drift: Some(mc), ..Default::default() })
            .unwrap();
        let e = r.get("transition-mass").unwrap();
        assert!((e.values["inf_mass"] / exact - 1.0).abs() < 0.02);
    }

    #[test]
    fn missing_density_without_samples_is_not_checkable() {
        let mut m = walk();
        m.transition_density = None;
        let d = DriftCheck {
            sets: vec![HyperRectangle::centered(1, 1.0); 2],
            grid_points: 3,
            quad_points: 11,
            mc_samples: 0,
            delta: 0.1,
            seed: 0,
        };
        let r = check_assumptions(&m, &[0.0], &AssumptionConfig { drift: Some(d), ..Default::default() }).unwrap();
        assert_eq!(r.get("transition-mass").unwrap().status, CheckStatus::NotCheckable);
    }

    #[test]
    fn lgss_delegates_to_structure() {
        let m = LinearGaussianModel::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::identity(1, 1),
            DVector::zeros(2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let obs = vec![DVector::from_element(1, 0.1)];
        let r = check_assumptions(&m, &obs, &AssumptionConfig::default()).unwrap();
        let e = r.get("lgss-structure").unwrap();
        assert_eq!(e.status, CheckStatus::Pass);
        assert_eq!(e.values["r_star"], 2.0);
    }

    #[test]
    fn deterministic_reports() {
        let mut m = walk();
        m.transition_density = None;
        let d = DriftCheck {
            sets: vec![HyperRectangle::centered(1, 1.0); 2],
            grid_points: 3,
            quad_points: 11,
            mc_samples: 500,
            delta: 0.1,
            seed: 3,
        };
        let config = AssumptionConfig { drift: Some(d), ..Default::default() };
        assert_eq!(
            check_assumptions(&m, &[0.2], &config).unwrap(),
            check_assumptions(&m, &[0.2], &config).unwrap()
        );
    }
}
