//! Run configuration: one JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cascade_risk::assess::{AssessConfig, StorageMode};
use cascade_risk::grid::{parse_case, CaseFormat, FailureRateConfig};
use cascade_risk::gradient::DEFAULT_THRESHOLD;
use cascade_risk::risk::IrmConfig;
use cascade_risk::tree::Policy;
use cascade_risk::NetworkCase;
use serde::Deserialize;

/// Every field is optional; flags win over file values, file values over defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: Option<PathBuf>,
    /// `json` or `matpower`; inferred from the extension when absent.
    pub format: Option<String>,
    /// Branch ids out of service before control.
    pub outages: Option<Vec<u32>>,
    pub tau_d: Option<f64>,
    pub t_max: Option<f64>,
    pub attempts: Option<usize>,
    pub policy: Option<String>,
    pub seed: Option<u64>,
    /// First risk reduction of the IRM loop ($).
    pub delta_r: Option<f64>,
    /// Compression threshold; forces compressed storage when set.
    pub threshold: Option<f64>,
    pub out: Option<PathBuf>,
    /// Finite-difference step for gradient validation (MW).
    pub step: Option<f64>,
    pub exhaustive_limit: Option<f64>,
    pub max_rounds: Option<usize>,
    /// Replaces the case's failure-rate block.
    pub failure_rate: Option<FailureRateConfig>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg = serde_json::from_str(&text).with_context(|| format!("bad config {}", path.display()))?;
        Ok(cfg)
    }

    /// `other`'s set fields replace ours.
    pub fn overlay(self, other: RunConfig) -> RunConfig {
        RunConfig {
            case: other.case.or(self.case),
            format: other.format.or(self.format),
            outages: other.outages.or(self.outages),
            tau_d: other.tau_d.or(self.tau_d),
            t_max: other.t_max.or(self.t_max),
            attempts: other.attempts.or(self.attempts),
            policy: other.policy.or(self.policy),
            seed: other.seed.or(self.seed),
            delta_r: other.delta_r.or(self.delta_r),
            threshold: other.threshold.or(self.threshold),
            out: other.out.or(self.out),
            step: other.step.or(self.step),
            exhaustive_limit: other.exhaustive_limit.or(self.exhaustive_limit),
            max_rounds: other.max_rounds.or(self.max_rounds),
            failure_rate: other.failure_rate.or(self.failure_rate),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn load_case(&self) -> Result<NetworkCase> {
        let Some(path) = &self.case else {
            bail!(cascade_risk::Error::InvalidArgument("no case file given (--case)".into()));
        };
        let format = match &self.format {
            Some(f) => f.parse::<CaseFormat>()?,
            None if path.extension().is_some_and(|e| e == "m") => CaseFormat::MatpowerText,
            None => CaseFormat::NativeJson,
        };
        let text = std::fs::read_to_string(path)
            .map_err(cascade_risk::Error::from)
            .with_context(|| format!("cannot read case {}", path.display()))?;
        let case = parse_case(&text, format).with_context(|| format!("cannot parse case {}", path.display()))?;
        match self.failure_rate {
            Some(fr) => Ok(NetworkCase::new(
                case.base_mva,
                case.buses.clone(),
                case.branches.clone(),
                case.generators.clone(),
                case.loads.clone(),
                fr,
                case.costs,
            )?),
            None => Ok(case),
        }
    }

    pub fn assess_config(&self) -> Result<AssessConfig> {
        let mut cfg = AssessConfig::default();
        if let Some(v) = self.tau_d {
            cfg.tau_d = v;
        }
        if let Some(v) = self.t_max {
            cfg.t_max = v;
        }
        cfg.depth()?;
        if let Some(v) = self.attempts {
            if v == 0 {
                bail!(cascade_risk::Error::InvalidArgument("attempts must be at least 1".into()));
            }
            cfg.budget.attempts = v;
        }
        if let Some(p) = &self.policy {
            cfg.budget.policy = p.parse::<Policy>()?;
        }
        if let Some(v) = self.seed {
            cfg.budget.seed = v;
        }
        if let Some(v) = self.exhaustive_limit {
            cfg.budget.exhaustive_limit = v;
        }
        if let Some(t) = self.threshold {
            if !(t >= 0.0) {
                bail!(cascade_risk::Error::InvalidArgument(format!("threshold must be >= 0, got {t}")));
            }
            cfg.storage = StorageMode::Compressed { threshold: t };
        } else {
            cfg.storage = StorageMode::Auto {
                threshold: DEFAULT_THRESHOLD,
            };
        }
        Ok(cfg)
    }

    pub fn irm_config(&self) -> Result<IrmConfig> {
        let mut cfg = IrmConfig {
            assess: self.assess_config()?,
            first_reduction: self.delta_r,
            ..IrmConfig::default()
        };
        if let Some(v) = self.max_rounds {
            cfg.max_rounds = v;
        }
        if let Some(d) = self.delta_r {
            if !(d >= 0.0) {
                bail!(cascade_risk::Error::InvalidArgument(format!("delta-r must be >= 0, got {d}")));
            }
        }
        Ok(cfg)
    }
}
