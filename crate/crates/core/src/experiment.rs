//! Config-driven experiment batches: instance loading, per-seed runs on a
//! worker pool, CSV summaries and an SVG chart of the median curves.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameInstance;
use crate::instances::{fixture_instance, gen_random_instance, Fixture};
use crate::lp::{build_lp, solve_lp, Slack};
use crate::mechanisms::{DeviationKind, SymmetricMechanism};
use crate::online::{
    compute_ground_truth, exploration_from_alpha, format_float, run_bandit, run_full_feedback,
    GroundTruth, LogPolicy, RunConfig, RunResult,
};
use crate::slope::median;
use crate::svg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InstanceSource {
    File {
        path: PathBuf,
    },
    Random {
        seed: u64,
        n: usize,
        states: usize,
        signals: usize,
        actions: usize,
    },
    Fixture {
        name: Fixture,
        eps: f64,
    },
}

impl InstanceSource {
    pub fn load(&self) -> Result<GameInstance> {
        match self {
            InstanceSource::File { path } => GameInstance::from_json(&fs::read_to_string(path)?),
            InstanceSource::Random {
                seed,
                n,
                states,
                signals,
                actions,
            } => gen_random_instance(*seed, *n, *states, *signals, *actions),
            InstanceSource::Fixture { name, eps } => fixture_instance(*name, *eps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmChoice {
    Offline,
    FullFeedback,
    Bandit,
}

fn default_deviations() -> DeviationKind {
    DeviationKind::InterimReduced
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmChoice,
    #[serde(default = "default_deviations")]
    pub deviations: DeviationKind,
    #[serde(default)]
    pub horizon: u64,
    /// Exploration rounds per action (bandit). Exclusive with `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploration: Option<u64>,
    /// `E = floor(T^alpha)` (bandit).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// IC slack for offline solves; absent means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub dump_lp: bool,
    pub instance: InstanceSource,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidDelta(self.delta));
        }
        if let Some(alpha) = self.alpha {
            if !(0.5..=1.0).contains(&alpha) {
                return Err(Error::Config(format!("alpha = {alpha} outside [1/2, 1]")));
            }
            if self.exploration.is_some() {
                return Err(Error::Config(
                    "give either exploration or alpha, not both".into(),
                ));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0) {
                return Err(Error::NegativeEpsilon(eps));
            }
        }
        match self.algorithm {
            AlgorithmChoice::Offline => {}
            AlgorithmChoice::FullFeedback | AlgorithmChoice::Bandit => {
                if self.horizon == 0 {
                    return Err(Error::InvalidHorizon);
                }
                if self.seeds.is_empty() {
                    return Err(Error::Config("seed list is empty".into()));
                }
            }
        }
        if self.algorithm == AlgorithmChoice::Bandit
            && self.exploration.is_none()
            && self.alpha.is_none()
        {
            return Err(Error::Config(
                "bandit runs need exploration or alpha".into(),
            ));
        }
        Ok(())
    }

    /// Exploration rounds per action, resolved from `exploration` or `alpha`.
    pub fn exploration_rounds(&self) -> Option<u64> {
        self.exploration
            .or_else(|| self.alpha.map(|a| exploration_from_alpha(self.horizon, a)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub seed: u64,
    pub horizon: u64,
    pub exploration: Option<u64>,
    pub regret: f64,
    pub viol_raw: f64,
    pub viol_clip: f64,
    pub opt_value: f64,
    pub runtime_ms: u128,
    pub status: String,
}

#[derive(Debug, Default)]
pub struct ExperimentReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<SummaryRow>,
    pub offline_value: Option<f64>,
    pub failures: Vec<(u64, String)>,
}

pub fn run_file_name(seed: u64) -> String {
    format!("run_seed{seed}.csv")
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let instance = cfg.instance.load()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut report = ExperimentReport::default();

    let instance_path = cfg.out_dir.join("instance.json");
    fs::write(&instance_path, instance.to_json()?)?;
    report.files.push(instance_path);

    if cfg.algorithm == AlgorithmChoice::Offline {
        return run_offline(cfg, &instance, report);
    }

    let truth = compute_ground_truth(&instance, cfg.deviations)?;
    let exploration = cfg.exploration_rounds();
    let runs: Vec<(u64, Result<RunResult>, u128)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let started = Instant::now();
            let run_cfg = RunConfig {
                horizon: cfg.horizon,
                delta: cfg.delta,
                seed,
                log: LogPolicy::Auto,
            };
            let result = match cfg.algorithm {
                AlgorithmChoice::FullFeedback => {
                    run_full_feedback(&instance, &truth, &run_cfg, Default::default())
                }
                _ => run_bandit(&instance, &truth, &run_cfg, exploration.unwrap_or(0)),
            }
            .and_then(|res| {
                let path = cfg.out_dir.join(run_file_name(seed));
                res.write_csv(fs::File::create(&path)?)?;
                Ok(res)
            });
            (seed, result, started.elapsed().as_millis())
        })
        .collect();

    let mut ok_runs = Vec::new();
    for (seed, result, runtime_ms) in runs {
        match result {
            Ok(res) => {
                report.files.push(cfg.out_dir.join(run_file_name(seed)));
                report.summary.push(SummaryRow {
                    seed,
                    horizon: cfg.horizon,
                    exploration,
                    regret: res.regret_cum,
                    viol_raw: res.viol_raw_cum,
                    viol_clip: res.viol_clip_cum,
                    opt_value: res.opt_value,
                    runtime_ms,
                    status: "ok".into(),
                });
                ok_runs.push(res);
            }
            Err(e) => {
                report.summary.push(SummaryRow {
                    seed,
                    horizon: cfg.horizon,
                    exploration,
                    regret: f64::NAN,
                    viol_raw: f64::NAN,
                    viol_clip: f64::NAN,
                    opt_value: truth.opt_value,
                    runtime_ms,
                    status: format!("error: {e}"),
                });
                report.failures.push((seed, e.to_string()));
            }
        }
    }

    let summary_path = cfg.out_dir.join("summary.csv");
    write_summary(&summary_path, &report.summary)?;
    report.files.push(summary_path);

    if !ok_runs.is_empty() {
        let chart_path = cfg.out_dir.join("curves.svg");
        fs::write(&chart_path, median_chart(&ok_runs))?;
        report.files.push(chart_path);
    }
    Ok(report)
}

fn run_offline(
    cfg: &ExperimentConfig,
    instance: &GameInstance,
    mut report: ExperimentReport,
) -> Result<ExperimentReport> {
    let truth = compute_ground_truth(instance, cfg.deviations)?;
    let slack = Slack::Finite(cfg.epsilon.unwrap_or(0.0));
    let lp = build_lp(slack, &truth.r_r, &truth.r_s, truth.deviations.matrices())?;
    let (xi, value) = solve_lp(&lp)?;
    let path = cfg.out_dir.join("mechanism.csv");
    write_mechanism_csv(&path, instance, &truth, &xi)?;
    report.files.push(path);
    if cfg.dump_lp {
        let path = cfg.out_dir.join("mechanism.lp");
        fs::write(&path, lp.to_lp_format())?;
        report.files.push(path);
    }
    report.offline_value = Some(value);
    Ok(report)
}

/// One row per class: label, signal counts, then action probabilities.
pub fn write_mechanism_csv(
    path: &Path,
    instance: &GameInstance,
    truth: &GroundTruth,
    xi: &SymmetricMechanism,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["class".to_string()];
    header.extend(instance.signals().iter().map(|s| format!("count_{s}")));
    header.extend(instance.actions().iter().cloned());
    w.write_record(&header)?;
    for c in 0..truth.partition.len() {
        let mut row = vec![truth.partition.label(c, instance.signals())];
        row.extend(truth.partition.counts(c).iter().map(|v| v.to_string()));
        row.extend(xi.row(c).iter().map(|&p| format_float(p)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "seed",
        "horizon",
        "exploration",
        "regret",
        "viol_raw",
        "viol_clip",
        "opt_value",
        "runtime_ms",
        "status",
    ])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.horizon.to_string(),
            r.exploration.map(|e| e.to_string()).unwrap_or_default(),
            format_float(r.regret),
            format_float(r.viol_raw),
            format_float(r.viol_clip),
            format_float(r.opt_value),
            r.runtime_ms.to_string(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Median cumulative regret and raw violation across runs, at logged rounds.
fn median_chart(runs: &[RunResult]) -> String {
    let len = runs.iter().map(|r| r.records.len()).min().unwrap_or(0);
    let mut regret = Vec::with_capacity(len);
    let mut viol = Vec::with_capacity(len);
    for i in 0..len {
        let t = runs[0].records[i].t as f64;
        let rs: Vec<f64> = runs.iter().map(|r| r.records[i].regret_cum).collect();
        let vs: Vec<f64> = runs.iter().map(|r| r.records[i].viol_raw_cum).collect();
        regret.push((t, median(&rs)));
        viol.push((t, median(&vs)));
    }
    svg::line_chart(
        "median cumulative regret and IC violation",
        "round t",
        &[("regret R^t", regret), ("violation V^t", viol)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
algorithm = "bandit"
deviations = "interim_reduced"
horizon = 500
alpha = 0.5
delta = 0.1
seeds = [1, 2]
out_dir = "out"

[instance]
source = "random"
seed = 3
n = 2
states = 2
signals = 2
actions = 2
"#;

    #[test]
    fn parse_and_round_trip() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.exploration_rounds(), Some(22));
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn config_errors_carry_position() {
        let bad = SAMPLE.replace("horizon = 500", "horizon = \"many\"");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
        let bad = SAMPLE.replace("alpha = 0.5", "alpha = 0.2");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(Error::Config(_))
        ));
        let bad = SAMPLE.replace("delta = 0.1", "delta = 1.5");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(Error::InvalidDelta(_))
        ));
    }

    #[test]
    fn fixture_source_parses() {
        let text = r#"
algorithm = "offline"
out_dir = "o"
[instance]
source = "fixture"
name = "lb-X"
eps = 0.05
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(
            cfg.instance,
            InstanceSource::Fixture {
                name: Fixture::LbX,
                eps: 0.05
            }
        );
    }
}
