//! Stationary observation streams, from the model itself or from elsewhere.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::model::{simulate_hmm, StateSpaceModel};
use crate::error::{Error, Result};
use crate::io::seed::{Purpose, SeedStream, SeedTags};
use crate::scalar::prelude::*;

/// How a latent AR(1) value is turned into an observation.
#[derive(Clone, Debug, PartialEq)]
pub enum ObsMap {
    /// Symbol = number of cut points strictly below the value.
    Threshold(Vec<f64>),
    /// `scale * z + offset`, repeated to the observation dimension.
    Affine { scale: f64, offset: f64, dim: usize },
}

impl ObsMap {
    pub fn threshold_symbol(cuts: &[f64], z: f64) -> usize {
        cuts.iter().filter(|&&c| c < z).count()
    }
}

#[derive(Clone, Debug)]
pub enum ObservationSource<M> {
    /// Observations simulated from `model` with `seed`, as in [`simulate_hmm`].
    Hmm { model: M, seed: u64 },
    /// A Gaussian AR(1) `Z_{k+1} = phi Z_k + noise_sd E_k`, started in its stationary law.
    Ar1 {
        phi: f64,
        noise_sd: f64,
        map: ObsMap,
        seed: u64,
    },
    /// One observation per line; vector observations as comma-separated values.
    Replay { path: PathBuf },
}

/// Observation types that can be produced by an AR(1) map or parsed from a replay file.
pub trait ObservationValue: Sized {
    fn from_latent(z: f64, map: &ObsMap) -> Result<Self>;
    fn parse_line(line: &str) -> std::result::Result<Self, String>;
    fn to_fields(&self) -> Vec<String>;
}

fn affine_only(map: &ObsMap) -> Result<(f64, f64, usize)> {
    match map {
        ObsMap::Affine { scale, offset, dim } => Ok((*scale, *offset, *dim)),
        ObsMap::Threshold(_) => Err(Error::InvalidArgument(
            "threshold maps produce symbols; this model needs real-valued observations".into(),
        )),
    }
}

impl ObservationValue for usize {
    fn from_latent(z: f64, map: &ObsMap) -> Result<Self> {
        match map {
            ObsMap::Threshold(cuts) => Ok(ObsMap::threshold_symbol(cuts, z)),
            ObsMap::Affine { .. } => Err(Error::InvalidArgument(
                "finite-alphabet models need a threshold map for AR(1) observations".into(),
            )),
        }
    }

    fn parse_line(line: &str) -> std::result::Result<Self, String> {
        line.trim().parse().map_err(|e| format!("{e}"))
    }

    fn to_fields(&self) -> Vec<String> {
        vec![self.to_string()]
    }
}

macro_rules! real_observation {
    ($t:ty) => {
        impl ObservationValue for $t {
            fn from_latent(z: f64, map: &ObsMap) -> Result<Self> {
                let (scale, offset, _) = affine_only(map)?;
                Ok(<$t as Scalar>::of(scale * z + offset))
            }

            fn parse_line(line: &str) -> std::result::Result<Self, String> {
                line.trim().parse().map_err(|e| format!("{e}"))
            }

            fn to_fields(&self) -> Vec<String> {
                vec![format!("{:.16e}", self)]
            }
        }
    };
}

real_observation!(f64);
real_observation!(f32);

impl<T: Scalar> ObservationValue for DVector<T> {
    fn from_latent(z: f64, map: &ObsMap) -> Result<Self> {
        let (scale, offset, dim) = affine_only(map)?;
        Ok(DVector::from_element(dim, T::of(scale * z + offset)))
    }

    fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let vals = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map(T::of).map_err(|e| format!("{e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(DVector::from_vec(vals))
    }

    fn to_fields(&self) -> Vec<String> {
        self.iter().map(|v| format!("{:.16e}", v.to_f64_lossy())).collect()
    }
}

/// `n` values of a stationary Gaussian AR(1), `Z_0` drawn from `N(0, noise_sd^2 / (1 - phi^2))`.
pub fn ar1_path(phi: f64, noise_sd: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(phi.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("AR(1) needs |phi| < 1, got {phi}")));
    }
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(Error::InvalidArgument(format!("AR(1) noise_sd must be >= 0, got {noise_sd}")));
    }
    let mut rng = SeedStream::new(seed).derive(SeedTags::new(Purpose::Observations, 0, 0));
    let draw = |rng: &mut dyn Rng| -> f64 { StandardNormal.sample(rng) };
    let stationary_sd = noise_sd / (1.0 - phi * phi).sqrt();
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        let mut z = stationary_sd * draw(&mut rng);
        out.push(z);
        for _ in 1..n {
            z = phi * z + noise_sd * draw(&mut rng);
            out.push(z);
        }
    }
    Ok(out)
}

pub fn read_replay<O: ObservationValue>(path: &Path, n: usize) -> Result<Vec<O>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::with_capacity(n);
    for (lineno, line) in text.lines().enumerate() {
        if out.len() == n {
            break;
        }
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v = O::parse_line(t)
            .map_err(|e| Error::input(path, format!("line {}: {e}", lineno + 1)))?;
        out.push(v);
    }
    if out.len() < n {
        return Err(Error::input(
            path,
            format!("truncated: {} observations available, {n} requested", out.len()),
        ));
    }
    Ok(out)
}

pub fn stationary_observation_stream<M>(source: &ObservationSource<M>, n: usize) -> Result<Vec<M::Obs>>
where
    M: StateSpaceModel,
    M::Obs: ObservationValue,
{
    match source {
        ObservationSource::Hmm { model, seed } => Ok(simulate_hmm(model, n, *seed)?.observations),
        ObservationSource::Ar1 {
            phi,
            noise_sd,
            map,
            seed,
        } => ar1_path(*phi, *noise_sd, n, *seed)?
            .into_iter()
            .map(|z| M::Obs::from_latent(z, map))
            .collect(),
        ObservationSource::Replay { path } => read_replay(path, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::DiscreteHmm;

    fn sample_variance(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn white_noise_has_no_lag_one_correlation() {
        let n = 100_000;
        let z = ar1_path(0.0, 1.0, n, 3).unwrap();
        let mean = z.iter().sum::<f64>() / n as f64;
        let c0: f64 = z.iter().map(|v| (v - mean).powi(2)).sum();
        let c1: f64 = z.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((c1 / c0).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn ar1_stationary_variance() {
        let z = ar1_path(0.8, 1.0, 100_000, 11).unwrap();
        let target = 1.0 / (1.0 - 0.64);
        assert!((sample_variance(&z) / target - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_explosive_ar1() {
        assert!(ar1_path(1.0, 1.0, 10, 0).is_err());
    }

    #[test]
    fn hmm_source_matches_simulation() {
        let m = DiscreteHmm::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
            &[vec![0.8, 0.2], vec![0.3, 0.7]],
            &[0.5, 0.5],
        )
        .unwrap();
        let src = ObservationSource::Hmm { model: m.clone(), seed: 5 };
        let a = stationary_observation_stream(&src, 500).unwrap();
        assert_eq!(a, simulate_hmm(&m, 500, 5).unwrap().observations);
        assert_eq!(a, stationary_observation_stream(&src, 500).unwrap());
    }

    #[test]
    fn replay_reads_and_detects_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("obs.csv");
        std::fs::write(&p, "1.5,2\n# comment\n-3,4e-1\n").unwrap();
        let v: Vec<DVector<f64>> = read_replay(&p, 2).unwrap();
        assert_eq!(v[1], DVector::from_vec(vec![-3.0, 0.4]));
        let e = read_replay::<DVector<f64>>(&p, 3).unwrap_err();
        assert!(e.to_string().contains("truncated"));
        let missing = read_replay::<usize>(&dir.path().join("nope"), 1).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }));
    }
}
