//! Executes a validated config and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use kronfilt::analysis::{emse_theory, power_db, Algorithm, MetricSeries, MonteCarlo, Scale};
use kronfilt::anc::run_anc;
use kronfilt::error::Error;
use kronfilt::nonlinear::nonlinear_trial;
use kronfilt::scenario::run_sysid;
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, FilterKind, ScenarioKind};

/// How a run ended, mapped onto the process exit code.
#[derive(Debug)]
pub enum RunError {
    /// Bad parameters discovered at run time.
    Invalid(String),
    AllDiverged(String),
    Other(anyhow::Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::AllTrialsDiverged { .. } => RunError::AllDiverged(e.to_string()),
            Error::InvalidParameter { .. } | Error::UnstableStepSize { .. } | Error::UnstableModel => {
                RunError::Invalid(e.to_string())
            }
            other => RunError::Other(other.into()),
        }
    }
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Other(e)
    }
}

struct Writer {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

impl Writer {
    /// `<metric>,<hash>` then one `iteration,value` row per sample.
    fn curve(&mut self, series: &MetricSeries) -> anyhow::Result<()> {
        let mut text = format!("{},{}\n", series.name, self.hash);
        for (i, v) in series.values.iter().enumerate() {
            text.push_str(&format!("{i},{v}\n"));
        }
        self.write(&format!("{}.csv", series.name), &text)
    }

    fn write(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn metric_summary(series: &MetricSeries) -> Value {
    json!({
        "steady_state_db": series.steady_state_db(),
        "final_db": series.values.last().copied(),
    })
}

/// Runs `cfg` and writes CSV curves plus `summary.json` into `out_dir`.
/// Returns the summary.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<Value, RunError> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut w = Writer {
        dir: out_dir.to_path_buf(),
        hash: cfg.hash(),
        files: Vec::new(),
    };
    let mc = MonteCarlo::new(cfg.trials, cfg.seed).with_threads(threads);
    let mut extra = Map::new();
    let mut metrics = Map::new();
    let mut completed = None;
    let mut diverged: Vec<usize> = Vec::new();

    match cfg.scenario {
        ScenarioKind::Sysid | ScenarioKind::Echo => {
            let alg = cfg.algorithm_spec()?;
            let report = run_sysid(&alg, &cfg.sysid_scenario()?, &mc)?;
            for s in report.series() {
                w.curve(s)?;
                metrics.insert(s.name.clone(), metric_summary(s));
            }
            completed = Some(report.completed);
            diverged = report.diverged;
            let engine = cfg.engine.as_ref().expect("validated");
            let variance = cfg.sysid_scenario()?.noise.variance();
            if let (Some(FilterKind::Nkp), Some(v)) = (cfg.algorithm, variance) {
                if let Ok(t) = emse_theory(engine.mu1, engine.mu2, v) {
                    extra.insert("emse_theory_db".into(), json!(power_db(t)));
                }
            }
        }
        ScenarioKind::Nonlinear => {
            let nl = cfg.nonlinear.as_ref().expect("validated");
            let engine = cfg.engine.as_ref().expect("validated").to_config()?;
            let (feb, scenario) = (nl.feb()?, nl.scenario(cfg.samples)?);
            let out = mc.run(|_, seed| Ok(vec![nonlinear_trial(&feb, &engine, &scenario, seed)?]))?;
            let mean = out.mean.into_iter().next().expect("one curve per trial");
            let mse = MetricSeries::from_linear("mse", Scale::Power, mean, out.completed);
            w.curve(&mse)?;
            metrics.insert(mse.name.clone(), metric_summary(&mse));
            completed = Some(out.completed);
            diverged = out.diverged;
            extra.insert("expanded_len".into(), json!(feb.expanded_len()));
        }
        ScenarioKind::Anc => {
            let anc = cfg.anc.as_ref().expect("validated");
            let engine = cfg.engine.as_ref().expect("validated").to_config()?;
            let report = run_anc(&engine, &anc.scenario()?, cfg.samples, &mc)?;
            w.curve(&report.anr)?;
            metrics.insert(report.anr.name.clone(), metric_summary(&report.anr));
            completed = Some(report.completed);
            diverged = report.diverged;
        }
        ScenarioKind::Theory => {
            let t = cfg.theory.as_ref().expect("validated");
            let emse = emse_theory(t.mu1, t.mu2, t.noise_variance)?;
            extra.insert("emse_theory".into(), json!(emse));
            extra.insert("emse_theory_db".into(), json!(power_db(emse)));
            extra.insert("stable".into(), json!(true));
        }
        ScenarioKind::Complexity => {
            let c = cfg.complexity.as_ref().expect("validated");
            let mut text = format!("complexity,{}\n", w.hash);
            let mut rows = Map::new();
            for alg in Algorithm::ALL {
                let value = kronfilt::analysis::complexity(&c.query(alg))?;
                text.push_str(&format!("{},{value}\n", alg.name()));
                rows.insert(alg.name().into(), json!(value));
            }
            w.write("complexity.csv", &text)?;
            extra.insert("complexity".into(), Value::Object(rows));
        }
    }

    let mut summary = Map::new();
    summary.insert("scenario".into(), json!(cfg.scenario.name()));
    summary.insert("config_hash".into(), json!(w.hash));
    summary.insert("config".into(), json!(cfg.to_toml()));
    summary.insert("seed".into(), json!(cfg.seed));
    if let Some(done) = completed {
        summary.insert("trials".into(), json!(cfg.trials));
        summary.insert("completed".into(), json!(done));
        summary.insert("diverged".into(), json!(diverged));
        summary.insert("metrics".into(), Value::Object(metrics));
    }
    summary.extend(extra);
    let mut files = w.files.clone();
    files.push("summary.json".into());
    summary.insert("files".into(), json!(files));
    let summary = Value::Object(summary);
    let text = serde_json::to_string_pretty(&summary).context("encoding summary")? + "\n";
    w.write("summary.json", &text)?;
    Ok(summary)
}
