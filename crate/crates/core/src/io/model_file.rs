//! Model files: one TOML table with a `kind` key.
//!
//! ```toml
//! kind = "discrete"
//! transition = [[0.9, 0.1], [0.2, 0.8]]
//! emission = [[0.8, 0.2], [0.3, 0.7]]   # rows are states
//! initial = [0.5, 0.5]
//! ```
//!
//! Other kinds: `linear-gaussian` (`a`, `r`, `b`, `s`, `init_mean`, `init_cov`),
//! `arch` (`a`, `b0`, `b1`, `obs_sd`, `init_mean`, `init_sd`) and `random-walk`
//! (`step_sd`, `obs_sd`, `init_sd`).

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::fields::Fields;
use crate::error::{Error, Result};
use crate::hmm::generic::ArchParams;
use crate::hmm::{DiscreteHmm, GenericHmm, LinearGaussianModel};
use crate::ScalarGenericHmm64;

pub const MODEL_KINDS: [&str; 4] = ["discrete", "linear-gaussian", "arch", "random-walk"];

#[derive(Clone, Debug)]
pub enum LoadedModel {
    Discrete(DiscreteHmm<f64>),
    LinearGaussian(LinearGaussianModel<f64>),
    Scalar(ScalarGenericHmm64),
}

impl LoadedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedModel::Discrete(_) => "discrete",
            LoadedModel::LinearGaussian(_) => "linear-gaussian",
            LoadedModel::Scalar(m) if m.label == "arch" => "arch",
            LoadedModel::Scalar(_) => "random-walk",
        }
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), c, |i, j| rows[i][j])
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}

/// Parse a model file; `origin` only labels diagnostics.
pub fn parse_model(text: &str, origin: &Path) -> Result<LoadedModel> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::input(origin, e.to_string()))?;
    let mut errors = Vec::new();
    let model = parse_table(&table, &mut errors);
    if !errors.is_empty() {
        return Err(Error::Config(errors.into_iter().map(|e| format!("{}: {e}", origin.display())).collect()));
    }
    model
        .expect("no diagnostics but no model")
        .map_err(|e| Error::Config(vec![format!("{}: {e}", origin.display())]))
}

fn parse_table(table: &toml::Table, errors: &mut Vec<String>) -> Option<Result<LoadedModel>> {
    let mut f = Fields::new(table, "", errors);
    let kind = f.string("kind");
    let kind = f.require("kind", kind)?;
    let (model, known): (Option<Result<LoadedModel>>, &[&str]) = match kind.as_str() {
        "discrete" => {
            let q = f.matrix("transition");
            let g = f.matrix("emission");
            let chi = f.reals("initial");
            let (q, g, chi) = (f.require("transition", q), f.require("emission", g), f.require("initial", chi));
            let m = match (q, g, chi) {
                (Some(q), Some(g), Some(chi)) => {
                    Some(DiscreteHmm::new(to_matrix(&q), to_matrix(&g), DVector::from_vec(chi)).map(LoadedModel::Discrete))
                }
                _ => None,
            };
            (m, &["kind", "transition", "emission", "initial"])
        }
        "linear-gaussian" => {
            let mut mats = Vec::new();
            for key in ["a", "r", "b", "s", "init_cov"] {
                let m = f.matrix(key);
                mats.push(f.require(key, m));
            }
            let mean = f.reals("init_mean");
            let mean = f.require("init_mean", mean);
            let m = match (mats.into_iter().collect::<Option<Vec<_>>>(), mean) {
                (Some(m), Some(mean)) => Some(
                    LinearGaussianModel::new(
                        to_matrix(&m[0]),
                        to_matrix(&m[1]),
                        to_matrix(&m[2]),
                        to_matrix(&m[3]),
                        DVector::from_vec(mean),
                        to_matrix(&m[4]),
                    )
                    .map(LoadedModel::LinearGaussian),
                ),
                _ => None,
            };
            (m, &["kind", "a", "r", "b", "s", "init_mean", "init_cov"])
        }
        "arch" => {
            const KEYS: [&str; 6] = ["a", "b0", "b1", "obs_sd", "init_mean", "init_sd"];
            let mut v = Vec::new();
            for key in KEYS {
                let x = f.real(key);
                v.push(f.require(key, x));
            }
            let m = v.into_iter().collect::<Option<Vec<f64>>>().map(|v| {
                let p = ArchParams {
                    a: v[0],
                    b0: v[1],
                    b1: v[2],
                    obs_sd: v[3],
                    init_mean: v[4],
                    init_sd: v[5],
                };
                if !(p.b0 > 0.0 && p.b1 >= 0.0 && p.obs_sd > 0.0 && p.init_sd > 0.0) {
                    return Err(Error::InvalidModel(
                        "arch needs b0 > 0, b1 >= 0, obs_sd > 0 and init_sd > 0".into(),
                    ));
                }
                Ok(LoadedModel::Scalar(GenericHmm::arch(p)))
            });
            (m, &["kind", "a", "b0", "b1", "obs_sd", "init_mean", "init_sd"])
        }
        "random-walk" => {
            let mut v = Vec::new();
            for key in ["step_sd", "obs_sd", "init_sd"] {
                let x = f.real(key);
                v.push(f.require(key, x));
            }
            let m = v.into_iter().collect::<Option<Vec<f64>>>().map(|v| {
                if v.iter().any(|&s| !(s > 0.0)) {
                    return Err(Error::InvalidModel("random-walk standard deviations must be positive".into()));
                }
                Ok(LoadedModel::Scalar(GenericHmm::gaussian_random_walk(v[0], v[1], v[2])))
            });
            (m, &["kind", "step_sd", "obs_sd", "init_sd"])
        }
        other => {
            f.push(format!("field kind: unknown model kind `{other}`; expected one of {}", MODEL_KINDS.join(", ")));
            return None;
        }
    };
    f.finish(known);
    model
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<LoadedModel> {
        parse_model(s, Path::new("m.toml"))
    }

    #[test]
    fn two_state_model_parses() {
        let m = parse(
            "kind = \"discrete\"\ntransition = [[0.9, 0.1], [0.2, 0.8]]\nemission = [[0.8, 0.2], [0.3, 0.7]]\ninitial = [0.5, 0.5]\n",
        )
        .unwrap();
        let LoadedModel::Discrete(m) = m else { panic!() };
        assert_eq!(m.emission()[(1, 0)], 0.3);
    }

    #[test]
    fn all_missing_fields_are_listed() {
        let Err(Error::Config(errs)) = parse("kind = \"linear-gaussian\"\na = [[1.0]]\n") else { panic!() };
        assert_eq!(errs.len(), 5, "{errs:?}");
    }

    #[test]
    fn invalid_rows_surface_as_config_error() {
        let e = parse("kind = \"discrete\"\ntransition = [[0.5, 0.1], [0.2, 0.8]]\nemission = [[1.0], [1.0]]\ninitial = [0.5, 0.5]\n");
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn misspelled_key_gets_suggestion() {
        let Err(Error::Config(errs)) = parse("kind = \"random-walk\"\nstep_sd = 1.0\nobs_sd = 1.0\ninit_sd = 1.0\nstepsd = 2\n")
        else {
            panic!()
        };
        assert!(errs[0].contains("did you mean `step_sd`"), "{errs:?}");
    }
}
