//! Experiment configuration files.
//!
//! A config is a TOML table. Relative paths (`model`, replay files) are taken
//! relative to the config file; `output_dir` relative to the working directory.
//! Loading reports every problem at once, as [`Error::Config`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use toml::Table;

use super::fields::Fields;
use crate::error::{Error, Result};
use crate::hmm::ObsMap;
use crate::lab::StabilityThresholds;
use crate::smc::TestFunction;
use crate::verify::{DriftCheck, FrequencyCheck, HyperRectangle, ObsSet, TailCheck};

pub const DEFAULT_REPLICATES: usize = 500;
pub const DEFAULT_LEVEL: f64 = 0.99;
pub const DEFAULT_LP_TOLERANCE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Filter,
    Variance,
    Stability,
    Lp,
    Forgetting,
    LoglikRate,
    Verify,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Simulate,
        Command::Filter,
        Command::Variance,
        Command::Stability,
        Command::Lp,
        Command::Forgetting,
        Command::LoglikRate,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Filter => "filter",
            Command::Variance => "variance",
            Command::Stability => "stability",
            Command::Lp => "lp",
            Command::Forgetting => "forgetting",
            Command::LoglikRate => "loglik-rate",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
                Error::InvalidArgument(format!("unknown command `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// Where the filtered observations come from.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservationSpec {
    /// Simulated from the filtering model itself.
    Model { seed: u64 },
    /// Simulated from another model file of the same kind.
    Hmm { model: PathBuf, seed: u64 },
    Ar1 {
        phi: f64,
        noise_sd: f64,
        map: ObsMap,
        seed: u64,
    },
    Replay { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoeblinSpec {
    pub set: HyperRectangle,
    pub grid_points: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifySpec {
    pub r_max: Option<usize>,
    pub doeblin: Option<DoeblinSpec>,
    pub frequency: Option<FrequencyCheck>,
    pub tail: Option<TailCheck>,
    pub drift: Option<DriftCheck>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: PathBuf,
    pub observations: Option<ObservationSpec>,
    /// `N`.
    pub particles: Option<usize>,
    /// `M`.
    pub replicates: usize,
    pub n_max: Option<usize>,
    pub p: Vec<f64>,
    pub h: Vec<TestFunction>,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub thresholds: StabilityThresholds,
    pub n_grid: Vec<usize>,
    pub time: Option<usize>,
    pub times: Vec<usize>,
    pub level: f64,
    pub tolerance: Option<f64>,
    pub chi_a: Option<Vec<f64>>,
    pub chi_b: Option<Vec<f64>>,
    pub verify: VerifySpec,
}

const TOP_KEYS: [&str; 20] = [
    "command",
    "model",
    "observations",
    "N",
    "M",
    "n_max",
    "p",
    "h",
    "base_seed",
    "output_dir",
    "thresholds",
    "n_grid",
    "time",
    "times",
    "level",
    "tolerance",
    "chi_a",
    "chi_b",
    "verify",
    "description",
];

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).map_err(|e| match e {
        Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
        other => other,
    })
}

/// Parse config text; relative paths inside are resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("parse error: {}", e.to_string().trim_end())]))?;
    let mut errors = Vec::new();
    let config = parse_top(&table, base_dir, &mut errors);
    if errors.is_empty() {
        Ok(config.expect("no diagnostics but no config"))
    } else {
        Err(Error::Config(errors))
    }
}

fn resolve(base: &Path, p: String) -> PathBuf {
    let p = PathBuf::from(p);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn parse_top(table: &Table, base: &Path, errors: &mut Vec<String>) -> Option<ExperimentConfig> {
    let mut f = Fields::new(table, "", errors);
    let _ = f.string("description");
    let command = f.string("command");
    let command = f.require("command", command).and_then(|c| match c.parse::<Command>() {
        Ok(c) => Some(c),
        Err(e) => {
            f.push(format!("field command: {}", e.to_string().trim_start_matches("invalid argument: ")));
            None
        }
    });
    let model = f.string("model");
    let model = f.require("model", model).map(|p| resolve(base, p));
    let particles = f.count("N", 1);
    let replicates = f.count("M", 1).unwrap_or(DEFAULT_REPLICATES);
    let n_max = f.count("n_max", 1);
    let base_seed = f.seed("base_seed").unwrap_or(0);
    let output_dir = f.string("output_dir").map_or_else(|| PathBuf::from("out"), PathBuf::from);
    let p = match table.get("p") {
        Some(toml::Value::Array(_)) => f.reals("p"),
        Some(_) => f.real("p").map(|v| vec![v]),
        None => None,
    };
    if let Some(bad) = p.as_ref().and_then(|p| p.iter().find(|&&v| !(v >= 1.0))) {
        f.push(format!("field p: moment order must be >= 1, got {bad}"));
    }
    let h = f.strings("h").map(|hs| {
        hs.iter()
            .filter_map(|s| match s.parse::<TestFunction>() {
                Ok(t) => Some(t),
                Err(e) => {
                    f.push(format!("field h: {}", e.to_string().trim_start_matches("invalid argument: ")));
                    None
                }
            })
            .collect::<Vec<_>>()
    });
    let n_grid = f.counts("n_grid", 1);
    let time = f.count("time", 0);
    let times = f.counts("times", 0);
    let level = f.real("level").unwrap_or(DEFAULT_LEVEL);
    if !(level > 0.0 && level < 1.0) {
        f.push(format!("field level: must be in (0, 1), got {level}"));
    }
    let tolerance = f.real("tolerance");
    if tolerance.is_some_and(|t| !(t > 0.0)) {
        f.push("field tolerance: must be positive".into());
    }
    let chi_a = f.reals("chi_a");
    let chi_b = f.reals("chi_b");
    let thresholds = f.table("thresholds").map_or_else(StabilityThresholds::default, |t| parse_thresholds(t, f.errors));
    let observations = f.table("observations").and_then(|t| parse_observations(t, base, f.errors));
    let verify = f.table("verify").map(|t| parse_verify(t, base_seed, f.errors)).unwrap_or_default();

    if let Some(cmd) = command {
        let needs = |f: &mut Fields<'_, '_>, key: &str, present: bool| {
            if !present {
                f.push(format!("field {key}: required by command `{cmd}`"));
            }
        };
        use Command::*;
        if matches!(cmd, Filter | Variance | Stability | Lp | Forgetting | LoglikRate) {
            needs(&mut f, "observations", table.contains_key("observations"));
        }
        if cmd != Verify {
            needs(&mut f, "n_max", table.contains_key("n_max"));
        }
        if matches!(cmd, Filter | Stability) {
            needs(&mut f, "N", table.contains_key("N"));
        }
        if matches!(cmd, Filter | Variance | Stability | Lp) {
            needs(&mut f, "h", table.contains_key("h"));
        }
        if matches!(cmd, Variance | Stability | Lp) && h.as_ref().is_some_and(|h| h.len() > 1) {
            f.push(format!("field h: command `{cmd}` takes exactly one test function"));
        }
        if cmd == Variance && table.contains_key("N") {
            needs(&mut f, "times", table.contains_key("times"));
        }
        if cmd == Lp {
            for key in ["p", "n_grid", "time"] {
                needs(&mut f, key, table.contains_key(key));
            }
        }
        if cmd == Forgetting {
            for key in ["chi_a", "chi_b"] {
                needs(&mut f, key, table.contains_key(key));
            }
        }
        if cmd == Verify && !table.contains_key("verify") {
            needs(&mut f, "verify", false);
        }
    }
    f.finish(&TOP_KEYS);
    if !errors.is_empty() {
        return None;
    }
    Some(ExperimentConfig {
        command: command?,
        model: model?,
        observations,
        particles,
        replicates,
        n_max,
        p: p.unwrap_or_default(),
        h: h.unwrap_or_default(),
        base_seed,
        output_dir,
        thresholds,
        n_grid: n_grid.unwrap_or_default(),
        time,
        times: times.unwrap_or_default(),
        level,
        tolerance,
        chi_a,
        chi_b,
        verify,
    })
}

fn unit_interval(f: &mut Fields<'_, '_>, key: &str, v: Option<f64>, default: f64) -> f64 {
    match v {
        Some(x) if x > 0.0 && x < 1.0 => x,
        Some(x) => {
            let msg = format!("field {}: must be in (0, 1), got {x}", f.name(key));
            f.push(msg);
            default
        }
        None => default,
    }
}

fn parse_thresholds(t: &Table, errors: &mut Vec<String>) -> StabilityThresholds {
    let d = StabilityThresholds::default();
    let mut f = Fields::new(t, "thresholds", errors);
    let tc = f.real("trend_confidence");
    let ratio = f.real("max_half_ratio");
    let level = f.real("envelope_level");
    let coverage = f.real("envelope_coverage");
    let out = StabilityThresholds {
        trend_confidence: unit_interval(&mut f, "trend_confidence", tc, d.trend_confidence),
        max_half_ratio: match ratio {
            Some(r) if r > 0.0 => r,
            Some(r) => {
                f.push(format!("field thresholds.max_half_ratio: must be positive, got {r}"));
                d.max_half_ratio
            }
            None => d.max_half_ratio,
        },
        envelope_level: unit_interval(&mut f, "envelope_level", level, d.envelope_level),
        envelope_coverage: match coverage {
            Some(c) if (0.0..=1.0).contains(&c) => c,
            Some(c) => {
                f.push(format!("field thresholds.envelope_coverage: must be in [0, 1], got {c}"));
                d.envelope_coverage
            }
            None => d.envelope_coverage,
        },
    };
    f.finish(&["trend_confidence", "max_half_ratio", "envelope_level", "envelope_coverage"]);
    out
}

fn parse_observations(t: &Table, base: &Path, errors: &mut Vec<String>) -> Option<ObservationSpec> {
    let mut f = Fields::new(t, "observations", errors);
    let kind = f.string("kind");
    let kind = f.require("kind", kind)?;
    let (spec, known): (Option<ObservationSpec>, &[&str]) = match kind.as_str() {
        "model" => {
            let seed = f.seed("seed").unwrap_or(0);
            (Some(ObservationSpec::Model { seed }), &["kind", "seed"])
        }
        "hmm" => {
            let seed = f.seed("seed").unwrap_or(0);
            let model = f.string("model");
            let model = f.require("model", model);
            (
                model.map(|m| ObservationSpec::Hmm {
                    model: resolve(base, m),
                    seed,
                }),
                &["kind", "seed", "model"],
            )
        }
        "ar1" => {
            let seed = f.seed("seed").unwrap_or(0);
            let phi = f.real("phi");
            let phi = f.require("phi", phi);
            if phi.is_some_and(|p| !(p.abs() < 1.0)) {
                f.push("field observations.phi: must satisfy |phi| < 1".into());
            }
            let noise_sd = f.real("noise_sd").unwrap_or(1.0);
            if !(noise_sd > 0.0) {
                f.push("field observations.noise_sd: must be positive".into());
            }
            let cuts = f.reals("thresholds");
            let scale = f.real("scale");
            let offset = f.real("offset");
            let dim = f.count("dim", 1);
            let map = match (cuts, scale.is_some() || offset.is_some() || dim.is_some()) {
                (Some(_), true) => {
                    f.push("observations: give either `thresholds` or `scale`/`offset`/`dim`, not both".into());
                    None
                }
                (Some(mut c), false) => {
                    if c.windows(2).any(|w| w[0] > w[1]) {
                        f.push("field observations.thresholds: cut points must be nondecreasing".into());
                    }
                    c.sort_by(f64::total_cmp);
                    Some(ObsMap::Threshold(c))
                }
                (None, _) => Some(ObsMap::Affine {
                    scale: scale.unwrap_or(1.0),
                    offset: offset.unwrap_or(0.0),
                    dim: dim.unwrap_or(1),
                }),
            };
            let spec = match (phi, map) {
                (Some(phi), Some(map)) => Some(ObservationSpec::Ar1 {
                    phi,
                    noise_sd,
                    map,
                    seed,
                }),
                _ => None,
            };
            (spec, &["kind", "seed", "phi", "noise_sd", "thresholds", "scale", "offset", "dim"])
        }
        "replay" => {
            let path = f.string("path");
            let path = f.require("path", path);
            (
                path.map(|p| ObservationSpec::Replay { path: resolve(base, p) }),
                &["kind", "path"],
            )
        }
        other => {
            f.push(format!(
                "field observations.kind: unknown source `{other}`; expected model, hmm, ar1 or replay"
            ));
            return None;
        }
    };
    f.finish(known);
    spec
}

fn parse_box(f: &mut Fields<'_, '_>) -> Option<HyperRectangle> {
    let lower = f.reals("lower");
    let upper = f.reals("upper");
    let (lower, upper) = (f.require("lower", lower)?, f.require("upper", upper)?);
    match HyperRectangle::new(lower, upper) {
        Ok(r) => Some(r),
        Err(e) => {
            let msg = format!("{}: {e}", f.name("lower/upper"));
            f.push(msg);
            None
        }
    }
}

fn parse_obs_set(t: &Table, prefix: &str, errors: &mut Vec<String>) -> Option<ObsSet> {
    let mut f = Fields::new(t, prefix, errors);
    let kind = f.string("kind");
    let kind = f.require("kind", kind)?;
    let (set, known): (Option<ObsSet>, &[&str]) = match kind.as_str() {
        "all" => (Some(ObsSet::All), &["kind"]),
        "symbols" => {
            let s = f.counts("symbols", 0);
            (f.require("symbols", s).map(|symbols| ObsSet::Symbols { symbols }), &["kind", "symbols"])
        }
        "box" => (
            parse_box(&mut f).map(|r| ObsSet::Box {
                lower: r.lower,
                upper: r.upper,
            }),
            &["kind", "lower", "upper"],
        ),
        other => {
            let msg = format!("field {}: unknown set kind `{other}`; expected all, symbols or box", f.name("kind"));
            f.push(msg);
            return None;
        }
    };
    f.finish(known);
    set
}

fn parse_verify(t: &Table, base_seed: u64, errors: &mut Vec<String>) -> VerifySpec {
    let mut f = Fields::new(t, "verify", errors);
    let r_max = f.count("r_max", 1);
    let doeblin = f.table("doeblin").and_then(|d| {
        let mut g = Fields::new(d, "verify.doeblin", f.errors);
        let set = parse_box(&mut g);
        let grid_points = g.count("grid_points", 2).unwrap_or(21);
        g.finish(&["lower", "upper", "grid_points"]);
        set.map(|set| DoeblinSpec { set, grid_points })
    });
    let frequency = f.table("frequency").map(|d| {
        let mut g = Fields::new(d, "verify.frequency", f.errors);
        let set = g.table("set");
        let block_len = g.count("block_len", 1).unwrap_or(1);
        let conf = g.real("confidence");
        let confidence = unit_interval(&mut g, "confidence", conf, 0.95);
        g.finish(&["set", "block_len", "confidence"]);
        let set = set.map_or(Some(ObsSet::All), |s| parse_obs_set(s, "verify.frequency.set", f.errors));
        FrequencyCheck {
            set: set.unwrap_or(ObsSet::All),
            block_len,
            confidence,
        }
    });
    let tail = f.table("tail").and_then(|d| {
        let mut g = Fields::new(d, "verify.tail", f.errors);
        let inner = parse_box(&mut g);
        let shell_scale = g.real("shell_scale").unwrap_or(10.0);
        if !(shell_scale > 1.0) {
            g.push("field verify.tail.shell_scale: must exceed 1".into());
        }
        let grid_points = g.count("grid_points", 2).unwrap_or(21);
        let eta = g.real("eta").unwrap_or(1e-6);
        let max_observations = g.count("max_observations", 1).unwrap_or(100);
        g.finish(&["lower", "upper", "shell_scale", "grid_points", "eta", "max_observations"]);
        inner.map(|inner| TailCheck {
            inner,
            shell_scale,
            grid_points,
            eta,
            max_observations,
        })
    });
    let drift = f.table("drift").and_then(|d| {
        let mut g = Fields::new(d, "verify.drift", f.errors);
        let set_tables = g.tables("sets");
        let set_tables = g.require("sets", set_tables);
        let grid_points = g.count("grid_points", 2).unwrap_or(11);
        let quad_points = g.count("quad_points", 3).unwrap_or(41);
        let mc_samples = g.count("mc_samples", 1).unwrap_or(2000);
        let delta = g.real("delta");
        let delta = g.require("delta", delta);
        let seed = g.seed("seed").unwrap_or(base_seed);
        g.finish(&["sets", "grid_points", "quad_points", "mc_samples", "delta", "seed"]);
        let sets: Option<Vec<HyperRectangle>> = set_tables?
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let mut h = Fields::new(s, &format!("verify.drift.sets[{i}]"), f.errors);
                let r = parse_box(&mut h);
                h.finish(&["lower", "upper"]);
                r
            })
            .collect();
        let sets = sets?;
        if sets.len() < 2 {
            f.push("field verify.drift.sets: need at least two sets D_0, D_1".into());
            return None;
        }
        Some(DriftCheck {
            sets,
            grid_points,
            quad_points,
            mc_samples,
            delta: delta?,
            seed,
        })
    });
    f.finish(&["r_max", "doeblin", "frequency", "tail", "drift"]);
    VerifySpec {
        r_max,
        doeblin,
        frequency,
        tail,
        drift,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ExperimentConfig> {
        parse_config(s, Path::new("/cfg"))
    }

    fn errors(s: &str) -> Vec<String> {
        match parse(s) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    const STABILITY: &str = r#"
command = "stability"
model = "two_state.toml"
N = 100
n_max = 50
h = "indicator(0)"
[observations]
kind = "model"
seed = 3
"#;

    #[test]
    fn minimal_stability_config_gets_defaults() {
        let c = parse(STABILITY).unwrap();
        assert_eq!(c.replicates, DEFAULT_REPLICATES);
        assert_eq!(c.thresholds, StabilityThresholds::default());
        assert_eq!(c.model, Path::new("/cfg/two_state.toml"));
        assert_eq!(c.output_dir, Path::new("out"));
        assert_eq!(c.h, vec![TestFunction::Indicator(0)]);
        assert_eq!(c.observations, Some(ObservationSpec::Model { seed: 3 }));
    }

    #[test]
    fn zero_particles_names_the_field() {
        let e = errors(&STABILITY.replace("N = 100", "N = 0"));
        assert!(e.iter().any(|m| m.starts_with("field N:")), "{e:?}");
    }

    #[test]
    fn every_violation_is_reported() {
        let e = errors(&STABILITY.replace("N = 100", "N = 0").replace("n_max = 50", "n_max = -2").replace("indicator(0)", "bogus"));
        assert_eq!(e.len(), 3, "{e:?}");
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let e = errors(&STABILITY.replace("n_max", "nmax"));
        assert!(e.iter().any(|m| m.contains("`nmax`") && m.contains("did you mean `n_max`")), "{e:?}");
    }

    #[test]
    fn nested_unknown_key_is_prefixed() {
        let e = errors(&format!("{STABILITY}[thresholds]\nmax_half_ration = 2.0\n"));
        assert!(e.iter().any(|m| m.contains("did you mean `thresholds.max_half_ratio`")), "{e:?}");
    }

    #[test]
    fn command_specific_requirements() {
        let e = errors("command = \"lp\"\nmodel = \"m.toml\"\nn_max = 6\nh = \"indicator(0)\"\n[observations]\nkind = \"model\"\n");
        for key in ["p", "n_grid", "time"] {
            assert!(e.iter().any(|m| m.starts_with(&format!("field {key}:"))), "{key}: {e:?}");
        }
    }

    #[test]
    fn syntax_error_is_a_config_error_with_position() {
        let e = errors("command = \n");
        assert!(e[0].contains("line 1"), "{e:?}");
    }

    #[test]
    fn ar1_threshold_source() {
        let c = parse(&STABILITY.replace("kind = \"model\"", "kind = \"ar1\"\nphi = 0.8\nthresholds = [0.0]")).unwrap();
        assert_eq!(
            c.observations,
            Some(ObservationSpec::Ar1 {
                phi: 0.8,
                noise_sd: 1.0,
                map: ObsMap::Threshold(vec![0.0]),
                seed: 3
            })
        );
    }

    #[test]
    fn verify_tables_parse() {
        let c = parse(
            r#"
command = "verify"
model = "rw.toml"
n_max = 100
[observations]
kind = "model"
[verify.doeblin]
lower = [-1.0]
upper = [1.0]
grid_points = 9
[verify.frequency]
set = { kind = "all" }
[verify.drift]
delta = 0.1
sets = [{ lower = [-1.0], upper = [1.0] }, { lower = [-1.0], upper = [1.0] }]
"#,
        )
        .unwrap();
        assert_eq!(c.verify.doeblin.unwrap().grid_points, 9);
        assert_eq!(c.verify.frequency.unwrap().set, ObsSet::All);
        assert_eq!(c.verify.drift.unwrap().sets.len(), 2);
    }
}
