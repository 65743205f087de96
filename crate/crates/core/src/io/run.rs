//! Command dispatch shared by the binary and the acceptance tests.
//!
//! Every command writes its CSV series and a `report.json` into the output
//! directory. Problems found before any computation starts (config, model file,
//! observation source) are [`Failure::Config`]; errors raised by the computation
//! itself are [`Failure::Experiment`].

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use super::config::{load_config, Command, ExperimentConfig, ObservationSpec, DEFAULT_LP_TOLERANCE};
use super::csv::{write_series_csv, Field};
use super::model_file::{load_model, LoadedModel};
use crate::error::{Error, Result};
use crate::exact::variance_series;
use crate::hmm::{
    simulate_hmm, stationary_observation_stream, DiscreteHmm, FromCoordinates, ObservationSource, ObservationValue,
    StateCoordinates, StateSpaceModel,
};
use crate::lab::loglik_rate::DEFAULT_RATE_TOLERANCE;
use crate::lab::{
    clt_variance_experiment, forgetting_experiment, loglik_rate_on, lp_error_experiment, variance_sequence_on,
    CltConfig, ExactReference, LpConfig, StabilityConfig,
};
use crate::scalar::prelude::*;
use crate::smc::{replicate_ensemble, TestFunction};
use crate::verify::{
    check_assumptions, check_observations, local_doeblin_constants, AssumptionConfig, AssumptionModel,
    AssumptionReport, CheckStatus,
};

#[derive(Debug)]
pub enum Failure {
    Config(Error),
    Experiment(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Experiment(_) => 1,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            Failure::Config(e) | Failure::Experiment(e) => e,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Experiment(e) => write!(f, "experiment failed: {e}"),
        }
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub base_seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: Command,
    pub pass: bool,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// One line for the terminal.
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Load `path`, apply `overrides` and run. `expected`, when given, must match
/// the config's `command` key.
pub fn run_config_file(path: &Path, expected: Option<Command>, overrides: &Overrides) -> Result<Outcome, Failure> {
    let mut config = load_config(path).map_err(Failure::Config)?;
    if let Some(cmd) = expected {
        if cmd != config.command {
            return Err(Failure::Config(Error::Config(vec![format!(
                "{}: field command: config is for `{}`, but `{cmd}` was requested",
                path.display(),
                config.command
            )])));
        }
    }
    if let Some(out) = &overrides.output_dir {
        config.output_dir = out.clone();
    }
    if let Some(seed) = overrides.base_seed {
        config.base_seed = seed;
    }
    run(&config)
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(Error::Config(vec![msg.into()]))
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn csv(&mut self, name: &str, schema: &[&str], rows: &[Vec<Field>]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        write_series_csv(&path, schema, rows).map_err(Failure::Experiment)?;
        self.files.push(path);
        Ok(())
    }

    fn report(&mut self, value: serde_json::Value) -> Result<(), Failure> {
        let path = self.dir.join("report.json");
        let mut text = serde_json::to_string_pretty(&value).expect("reports serialize");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Failure::Experiment(Error::io(&path, e)))?;
        self.files.push(path);
        Ok(())
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome, Failure> {
    let model = load_model(&config.model).map_err(Failure::Config)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Failure::Config(Error::io(&config.output_dir, e)))?;
    let mut out = Output {
        dir: config.output_dir.clone(),
        files: Vec::new(),
    };
    let (pass, summary) = match &model {
        LoadedModel::Discrete(m) => dispatch_discrete(m, config, &mut out)?,
        LoadedModel::LinearGaussian(m) => dispatch_continuous(m, config, &mut out, |l| match l {
            LoadedModel::LinearGaussian(m) => Some(m),
            _ => None,
        })?,
        LoadedModel::Scalar(m) => dispatch_continuous(m, config, &mut out, |l| match l {
            LoadedModel::Scalar(m) => Some(m),
            _ => None,
        })?,
    };
    Ok(Outcome {
        command: config.command,
        pass,
        output_dir: out.dir,
        files: out.files,
        summary,
    })
}

fn observations<M>(
    model: &M,
    kind: &str,
    config: &ExperimentConfig,
    same_kind: impl FnOnce(LoadedModel) -> Option<M>,
) -> Result<Vec<M::Obs>, Failure>
where
    M: StateSpaceModel + Clone,
    M::Obs: ObservationValue,
{
    let spec = config
        .observations
        .as_ref()
        .ok_or_else(|| config_err(format!("field observations: required by command `{}`", config.command)))?;
    let n = config
        .n_max
        .ok_or_else(|| config_err(format!("field n_max: required by command `{}`", config.command)))?;
    let source = match spec {
        ObservationSpec::Model { seed } => ObservationSource::Hmm {
            model: model.clone(),
            seed: *seed,
        },
        ObservationSpec::Hmm { model: path, seed } => {
            let other = load_model(path).map_err(Failure::Config)?;
            let other_kind = other.kind();
            let m = same_kind(other).ok_or_else(|| {
                config_err(format!(
                    "field observations.model: {} is a `{other_kind}` model, the filter model is `{kind}`",
                    path.display()
                ))
            })?;
            ObservationSource::Hmm { model: m, seed: *seed }
        }
        ObservationSpec::Ar1 {
            phi,
            noise_sd,
            map,
            seed,
        } => ObservationSource::Ar1 {
            phi: *phi,
            noise_sd: *noise_sd,
            map: map.clone(),
            seed: *seed,
        },
        ObservationSpec::Replay { path } => ObservationSource::Replay { path: path.clone() },
    };
    stationary_observation_stream(&source, n).map_err(Failure::Config)
}

fn validate_observations<M: StateSpaceModel>(model: &M, y: &[M::Obs]) -> Result<(), Failure> {
    y.iter().enumerate().try_for_each(|(k, v)| {
        model
            .validate_observation(v)
            .map_err(|e| config_err(format!("observation {k}: {e}")))
    })
}

fn column_names(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (0..dim).map(|i| format!("{prefix}{i}")).collect()
    }
}

fn write_observations<O: ObservationValue>(out: &mut Output, y: &[O]) -> Result<(), Failure> {
    let dim = y.first().map_or(1, |v| v.to_fields().len());
    let names = column_names("y", dim);
    let mut schema = vec!["time"];
    schema.extend(names.iter().map(String::as_str));
    let rows: Vec<Vec<Field>> = y
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let mut row = vec![Field::from(k)];
            row.extend(v.to_fields().into_iter().map(Field::Text));
            row
        })
        .collect();
    out.csv("observations.csv", &schema, &rows)
}

fn single_h(config: &ExperimentConfig) -> TestFunction {
    config.h[0]
}

fn require<T: Copy>(v: Option<T>, key: &str, config: &ExperimentConfig) -> Result<T, Failure> {
    v.ok_or_else(|| config_err(format!("field {key}: required by command `{}`", config.command)))
}

fn check_h_domain(h: &[TestFunction], states: Option<usize>, dim: usize) -> Result<(), Failure> {
    for f in h {
        let bad = match (*f, states) {
            (TestFunction::Indicator(s), Some(m)) => s >= m,
            (TestFunction::Indicator(_), None) => true,
            (TestFunction::Coordinate(i), _) | (TestFunction::BoundedSigmoid { index: i, .. }, _) => i >= dim,
            (TestFunction::Constant(_), _) => false,
        };
        if bad {
            return Err(config_err(format!("field h: `{f}` is not defined on this model's state space")));
        }
    }
    Ok(())
}

fn simulate<M>(model: &M, config: &ExperimentConfig, out: &mut Output) -> Result<(bool, String), Failure>
where
    M: StateSpaceModel,
    M::State: StateCoordinates<M::Scalar>,
    M::Obs: ObservationValue,
{
    let n = require(config.n_max, "n_max", config)?;
    let path = simulate_hmm(model, n, config.base_seed).map_err(Failure::Experiment)?;
    let xdim = path.states.first().map_or(1, |x| x.dim());
    let ydim = path.observations.first().map_or(1, |y| y.to_fields().len());
    let xs = column_names("x", xdim);
    let ys = column_names("y", ydim);
    let mut schema = vec!["time"];
    schema.extend(xs.iter().chain(&ys).map(String::as_str));
    let rows: Vec<Vec<Field>> = path
        .states
        .iter()
        .zip(&path.observations)
        .enumerate()
        .map(|(k, (x, y))| {
            let mut row = vec![Field::from(k)];
            match x.discrete_index() {
                Some(i) => row.push(Field::from(i)),
                None => row.extend((0..xdim).map(|i| Field::Real(x.coord(i).map_or(f64::NAN, |v| v.to_f64_lossy())))),
            }
            row.extend(y.to_fields().into_iter().map(Field::Text));
            row
        })
        .collect();
    out.csv("trajectory.csv", &schema, &rows)?;
    out.report(json!({ "command": "simulate", "n": n, "seed": config.base_seed, "pass": true }))?;
    Ok((true, format!("simulated {n} steps")))
}

fn filter<M>(model: &M, y: &[M::Obs], config: &ExperimentConfig, out: &mut Output) -> Result<(bool, String), Failure>
where
    M: StateSpaceModel,
    M::State: StateCoordinates<M::Scalar>,
{
    let n_particles = require(config.particles, "N", config)?;
    let records = replicate_ensemble(model, y, n_particles, config.replicates, config.base_seed, &config.h)
        .map_err(Failure::Experiment)?;
    let mut rows = Vec::new();
    for r in &records {
        for (f, label) in r.labels.iter().enumerate() {
            for (k, v) in r.predictor[f].iter().enumerate() {
                rows.push(vec![r.replicate_id.into(), k.into(), "pred".into(), label.as_str().into(), v.to_f64_lossy().into()]);
            }
            for (k, v) in r.filter[f].iter().enumerate() {
                rows.push(vec![r.replicate_id.into(), k.into(), "filt".into(), label.as_str().into(), v.to_f64_lossy().into()]);
            }
        }
        for (k, v) in r.log_likelihood.iter().enumerate() {
            rows.push(vec![r.replicate_id.into(), k.into(), "loglik".into(), "".into(), v.to_f64_lossy().into()]);
        }
    }
    out.csv("replicates.csv", &["replicate", "time", "estimator", "function", "value"], &rows)?;
    let seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
    out.report(json!({
        "command": "filter",
        "particles": n_particles,
        "replicates": config.replicates,
        "n": y.len(),
        "functions": config.h.iter().map(|h| h.label()).collect::<Vec<_>>(),
        "replicate_seeds": seeds,
        "pass": true,
    }))?;
    Ok((true, format!("{} replicates of {} steps", records.len(), y.len())))
}

fn stability<M>(model: &M, y: &[M::Obs], config: &ExperimentConfig, out: &mut Output) -> Result<(bool, String), Failure>
where
    M: ExactReference,
    M::State: StateCoordinates<M::Scalar>,
{
    let sc = StabilityConfig {
        particles: require(config.particles, "N", config)?,
        replicates: config.replicates,
        n_max: y.len(),
        h: single_h(config),
        base_seed: config.base_seed,
        thresholds: config.thresholds,
    };
    if sc.replicates < 2 {
        return Err(config_err("field M: the stability experiment needs M >= 2"));
    }
    let report = variance_sequence_on(model, y, &sc).map_err(Failure::Experiment)?;
    let rows: Vec<Vec<Field>> = (0..report.empirical_variance.len())
        .map(|k| {
            vec![
                k.into(),
                report.empirical_variance[k].into(),
                report.exact_sigma2.as_ref().map_or(f64::NAN, |s| s[k]).into(),
                report
                    .inside_envelope
                    .as_ref()
                    .map_or(Field::Text("NaN".into()), |b| Field::from(b[k] as usize)),
            ]
        })
        .collect();
    out.csv("stability.csv", &["time", "empirical_variance", "exact_sigma2", "inside_envelope"], &rows)?;
    out.report(json!({ "command": "stability", "pass": report.pass, "report": report }))?;
    let t = &report.trend;
    Ok((
        report.pass,
        format!(
            "slope CI [{:.3e}, {:.3e}], half ratio {:.3}{}",
            t.ci_low,
            t.ci_high,
            t.half_ratio,
            report.envelope_coverage.map_or(String::new(), |c| format!(", envelope coverage {c:.3}"))
        ),
    ))
}

fn loglik_rate<M: ExactReference>(
    model: &M,
    y: &[M::Obs],
    config: &ExperimentConfig,
    out: &mut Output,
) -> Result<(bool, String), Failure> {
    let report = loglik_rate_on(model, y, config.tolerance.unwrap_or(DEFAULT_RATE_TOLERANCE)).map_err(|e| match e {
        Error::InvalidArgument(_) => Failure::Config(e),
        e => Failure::Experiment(e),
    })?;
    let rows: Vec<Vec<Field>> = report.rate.iter().enumerate().map(|(k, &r)| vec![(k + 1).into(), r.into()]).collect();
    out.csv("loglik_rate.csv", &["n", "rate"], &rows)?;
    out.report(json!({ "command": "loglik-rate", "pass": report.pass, "report": report }))?;
    Ok((
        report.pass,
        format!("rate {:.6} (last-quartile sd {:.2e})", report.limit_estimate, report.last_quartile_std),
    ))
}

fn assumption_rows(report: &AssumptionReport) -> Vec<Vec<Field>> {
    let status = |s: CheckStatus| match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::NotCheckable => "not-checkable",
    };
    let mut rows = Vec::new();
    for c in &report.checks {
        if c.values.is_empty() {
            rows.push(vec![c.name.as_str().into(), status(c.status).into(), "".into(), f64::NAN.into()]);
        }
        for (k, v) in &c.values {
            rows.push(vec![c.name.as_str().into(), status(c.status).into(), k.as_str().into(), (*v).into()]);
        }
    }
    rows
}

fn write_verify(
    out: &mut Output,
    report: &AssumptionReport,
    extra: serde_json::Value,
) -> Result<(bool, String), Failure> {
    out.csv("assumptions.csv", &["check", "status", "quantity", "value"], &assumption_rows(report))?;
    let pass = report.overall() != CheckStatus::Fail;
    out.report(json!({ "command": "verify", "pass": pass, "checks": report, "doeblin": extra }))?;
    let summary = report
        .checks
        .iter()
        .map(|c| format!("{}: {:?}", c.name, c.status))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((pass, summary))
}

fn assumption_config(config: &ExperimentConfig) -> AssumptionConfig {
    AssumptionConfig {
        frequency: config.verify.frequency.clone(),
        tail: config.verify.tail.clone(),
        drift: config.verify.drift.clone(),
        lgss_r_max: config.verify.r_max,
    }
}

fn needs_observations(config: &ExperimentConfig) -> bool {
    let v = &config.verify;
    v.frequency.is_some() || v.tail.is_some() || v.drift.is_some()
}

fn dispatch_discrete(model: &DiscreteHmm<f64>, config: &ExperimentConfig, out: &mut Output) -> Result<(bool, String), Failure> {
    check_h_domain(&config.h, Some(model.states()), 1)?;
    let kind = "discrete";
    let same = |l: LoadedModel| match l {
        LoadedModel::Discrete(m) => Some(m),
        _ => None,
    };
    match config.command {
        Command::Simulate => simulate(model, config, out),
        Command::Verify => {
            if config.verify.doeblin.is_some() || config.verify.tail.is_some() || config.verify.drift.is_some() {
                return Err(config_err(
                    "field verify: only the frequency check applies to finite-state models",
                ));
            }
            let y = if needs_observations(config) {
                let y = observations(model, kind, config, same)?;
                validate_observations(model, &y)?;
                write_observations(out, &y)?;
                y
            } else {
                Vec::new()
            };
            let report = check_observations::<f64, usize>(&y, &assumption_config(config)).map_err(Failure::Config)?;
            write_verify(out, &report, serde_json::Value::Null)
        }
        cmd => {
            let y = observations(model, kind, config, same)?;
            validate_observations(model, &y)?;
            write_observations(out, &y)?;
            match cmd {
                Command::Filter => filter(model, &y, config, out),
                Command::Stability => stability(model, &y, config, out),
                Command::LoglikRate => loglik_rate(model, &y, config, out),
                Command::Variance => variance(model, &y, config, out),
                Command::Lp => lp(model, &y, config, out),
                Command::Forgetting => forgetting(model, &y, config, out),
                Command::Simulate | Command::Verify => unreachable!(),
            }
        }
    }
}

fn variance(model: &DiscreteHmm<f64>, y: &[usize], config: &ExperimentConfig, out: &mut Output) -> Result<(bool, String), Failure> {
    let h = single_h(config);
    let series = variance_series(model, y, &h.on_states::<f64>(model.states()), h.label()).map_err(Failure::Experiment)?;
    let rows: Vec<Vec<Field>> = series
        .sigma2
        .iter()
        .enumerate()
        .map(|(k, &s)| vec![k.into(), s.into(), series.sigma2_filter.get(k).copied().unwrap_or(f64::NAN).into()])
        .collect();
    out.csv("variance.csv", &["time", "sigma2", "sigma2_filter"], &rows)?;
    let Some(particles) = config.particles else {
        out.report(json!({ "command": "variance", "pass": true, "h": h.label(), "n": y.len() }))?;
        return Ok((true, format!("exact variances for {} times", series.sigma2.len())));
    };
    if let Some(&bad) = config.times.iter().find(|&&t| t >= y.len()) {
        return Err(config_err(format!("field times: time {bad} needs n_max > {bad}")));
    }
    let cc = CltConfig {
        particles,
        replicates: config.replicates,
        h,
        times: config.times.clone(),
        level: config.level,
        base_seed: config.base_seed,
    };
    let report = clt_variance_experiment(model, y, &cc).map_err(Failure::Experiment)?;
    let rows: Vec<Vec<Field>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.time.into(),
                r.estimator.into(),
                r.exact.into(),
                r.empirical.into(),
                r.envelope_low.into(),
                r.envelope_high.into(),
                (r.inside as usize).into(),
            ]
        })
        .collect();
    out.csv(
        "clt.csv",
        &["time", "estimator", "exact", "empirical", "envelope_low", "envelope_high", "inside"],
        &rows,
    )?;
    out.report(json!({ "command": "variance", "pass": report.pass, "report": report }))?;
    let inside = report.rows.iter().filter(|r| r.inside).count();
    Ok((report.pass, format!("{inside}/{} replicate variances inside the envelope", report.rows.len())))
}

fn lp(model: &DiscreteHmm<f64>, y: &[usize], config: &ExperimentConfig, out: &mut Output) -> Result<(bool, String), Failure> {
    let time = require(config.time, "time", config)?;
    if time >= y.len() {
        return Err(config_err(format!("field time: time {time} needs n_max > {time}")));
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &p in &config.p {
        let lc = LpConfig {
            p,
            time,
            n_grid: config.n_grid.clone(),
            replicates: config.replicates,
            h: single_h(config),
            base_seed: config.base_seed,
            tolerance: config.tolerance.unwrap_or(DEFAULT_LP_TOLERANCE),
        };
        let r = lp_error_experiment(model, y, &lc).map_err(Failure::Experiment)?;
        for row in &r.rows {
            rows.push(vec![p.into(), row.particles.into(), row.estimate.into(), r.reference.into(), row.relative_gap.into()]);
        }
        reports.push(r);
    }
    out.csv("lp.csv", &["p", "particles", "estimate", "reference", "relative_gap"], &rows)?;
    let pass = reports.iter().all(|r| r.pass);
    let summary = reports
        .iter()
        .map(|r| format!("p={}: gap {:.3}", r.p, r.final_gap))
        .collect::<Vec<_>>()
        .join(", ");
    out.report(json!({ "command": "lp", "pass": pass, "reports": reports }))?;
    Ok((pass, summary))
}

fn forgetting(model: &DiscreteHmm<f64>, y: &[usize], config: &ExperimentConfig, out: &mut Output) -> Result<(bool, String), Failure> {
    let initial = |key: &str, v: &Option<Vec<f64>>| -> Result<DVector<f64>, Failure> {
        let v = v.as_ref().ok_or_else(|| config_err(format!("field {key}: required by command `forgetting`")))?;
        let chi = DVector::from_vec(v.clone());
        model
            .with_initial(chi.clone())
            .map_err(|e| config_err(format!("field {key}: {e}")))?;
        Ok(chi)
    };
    let a = initial("chi_a", &config.chi_a)?;
    let b = initial("chi_b", &config.chi_b)?;
    let report = forgetting_experiment(model, y, &a, &b).map_err(Failure::Experiment)?;
    let rows: Vec<Vec<Field>> = (0..report.tv_gap.len())
        .map(|k| vec![k.into(), report.tv_gap[k].into(), report.loglik_gap.get(k).copied().unwrap_or(f64::NAN).into()])
        .collect();
    out.csv("forgetting.csv", &["time", "tv_gap", "loglik_gap"], &rows)?;
    out.report(json!({ "command": "forgetting", "pass": report.pass, "report": report }))?;
    let summary = match (report.rate, report.ci_high) {
        (Some(rate), Some(hi)) => format!("log-gap slope {rate:.4} (upper {hi:.4})"),
        _ => "gap vanishes".to_string(),
    };
    Ok((report.pass, summary))
}

fn dispatch_continuous<M>(
    model: &M,
    config: &ExperimentConfig,
    out: &mut Output,
    same: impl FnOnce(LoadedModel) -> Option<M>,
) -> Result<(bool, String), Failure>
where
    M: ExactReference + AssumptionModel + Clone,
    M::State: StateCoordinates<M::Scalar> + FromCoordinates<M::Scalar>,
    M::Obs: ObservationValue + StateCoordinates<M::Scalar>,
    M::Scalar: Serialize,
{
    let probe = simulate_hmm(model, 1, 0).map_err(Failure::Config)?;
    let state_dim = probe.states[0].dim();
    check_h_domain(&config.h, None, state_dim)?;
    let kind = "continuous";
    match config.command {
        Command::Simulate => simulate(model, config, out),
        Command::Variance | Command::Lp | Command::Forgetting => Err(config_err(format!(
            "field model: command `{}` needs a finite-state (discrete) model",
            config.command
        ))),
        Command::Verify => {
            let y = if needs_observations(config) {
                let y = observations(model, kind, config, same)?;
                write_observations(out, &y)?;
                y
            } else {
                Vec::new()
            };
            let report = check_assumptions(model, &y, &assumption_config(config)).map_err(Failure::Experiment)?;
            let doeblin = match &config.verify.doeblin {
                Some(d) => {
                    if d.set.dim() != state_dim {
                        return Err(config_err(format!(
                            "field verify.doeblin: box has dimension {}, the state has {state_dim}",
                            d.set.dim()
                        )));
                    }
                    let c = local_doeblin_constants(model, &d.set, d.grid_points).map_err(Failure::Experiment)?;
                    serde_json::to_value(&c).expect("certificate serializes")
                }
                None => serde_json::Value::Null,
            };
            write_verify(out, &report, doeblin)
        }
        cmd => {
            let y = observations(model, kind, config, same)?;
            validate_observations(model, &y)?;
            write_observations(out, &y)?;
            match cmd {
                Command::Filter => filter(model, &y, config, out),
                Command::Stability => stability(model, &y, config, out),
                Command::LoglikRate => loglik_rate(model, &y, config, out),
                _ => unreachable!(),
            }
        }
    }
}
