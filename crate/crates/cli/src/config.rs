//! Run configuration: a JSON file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use shelfqaoa::optimize::OptimizerConfig;
use shelfqaoa::qaoa::NoiseConfig;
use shelfqaoa::strategies::{Estimator, PrefixSource, Strategy, StudyConfig};
use shelfqaoa::warehouse::FcForm;
use shelfqaoa::ProblemInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Exact,
    Sampled,
}

/// Every field is optional in the file; missing ones take these defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub instance: Option<PathBuf>,
    pub strategy: Strategy,
    pub p_max: usize,
    /// Starts (multistart) or chains (recursive).
    #[serde(alias = "n_starts", alias = "n_chains")]
    pub runs: usize,
    pub estimator: EstimatorKind,
    pub shots: usize,
    pub noise: bool,
    pub p1: f64,
    pub p2: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub prefix: PrefixSource,
    pub fc_literal: bool,
    pub optimizer: OptimizerConfig,
    pub top_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let noise = NoiseConfig::default();
        Self {
            instance: None,
            strategy: Strategy::Recursive,
            p_max: 5,
            runs: 500,
            estimator: EstimatorKind::Exact,
            shots: 200,
            noise: false,
            p1: noise.p1,
            p2: noise.p2,
            trajectories: noise.trajectories,
            seed: 0,
            out: PathBuf::from("out"),
            prefix: PrefixSource::default(),
            fc_literal: false,
            optimizer: OptimizerConfig::default(),
            top_k: 10,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("config not found: {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("bad config {}", p.display()))
            }
        }
    }

    pub fn form(&self) -> FcForm {
        if self.fc_literal {
            FcForm::Literal
        } else {
            FcForm::Shelf
        }
    }

    pub fn estimator(&self) -> anyhow::Result<Estimator> {
        Ok(match self.estimator {
            EstimatorKind::Exact => Estimator::Exact,
            EstimatorKind::Sampled => {
                if self.shots == 0 {
                    bail!("shots must be at least 1 with the sampled estimator");
                }
                Estimator::Sampled { shots: self.shots }
            }
        })
    }

    pub fn study(&self) -> anyhow::Result<StudyConfig> {
        let cfg = StudyConfig {
            runs: self.runs,
            max_layers: self.p_max,
            seed: self.seed,
            estimator: self.estimator()?,
            optimizer: self.optimizer.clone(),
            prefix: self.prefix,
            top_k: self.top_k,
        };
        cfg.validate()?;
        if self.top_k == 0 {
            bail!("top_k must be at least 1");
        }
        Ok(cfg)
    }

    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig {
            p1: self.p1,
            p2: self.p2,
            trajectories: self.trajectories,
            seed: self.seed,
        }
    }

    /// Reads and validates the instance file.
    pub fn load_instance(&self) -> anyhow::Result<ProblemInstance> {
        let Some(path) = &self.instance else {
            bail!("no instance given (use --instance or the config file)");
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                bail!("instance not found: {}", path.display())
            }
            Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
        };
        let inst = ProblemInstance::from_json(&text)
            .with_context(|| format!("bad instance {}", path.display()))?;
        let report = inst.validate();
        for w in report.warnings() {
            eprintln!("warning: {}", w.message);
        }
        report.into_result()?;
        Ok(inst)
    }
}
