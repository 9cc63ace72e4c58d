use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::PriorMode;

/// How the true initial state is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthMode {
    /// Drawn from the estimator prior `N(mean, P)`.
    #[default]
    Sampled,
    /// Equal to the estimator prior mean.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Ekf,
    Gssm,
    Fgo,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ekf => "ekf",
            EstimatorKind::Gssm => "gssm",
            EstimatorKind::Fgo => "fgo",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ekf" => Ok(EstimatorKind::Ekf),
            "gssm" => Ok(EstimatorKind::Gssm),
            "fgo" => Ok(EstimatorKind::Fgo),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Discrete process-noise variances per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessNoise {
    pub x: f64,
    pub xdot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Priors {
    pub x: f64,
    pub xdot: f64,
    pub h: f64,
    #[serde(rename = "P_x")]
    pub p_x: f64,
    #[serde(rename = "P_xdot")]
    pub p_xdot: f64,
    #[serde(rename = "P_h")]
    pub p_h: f64,
}

/// Every numeric setting of the radar experiment. Units are metres and seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "T")]
    pub dt: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    pub w: usize,
    pub seed: u64,
    pub runs: usize,
    pub truth_mode: TruthMode,
    #[serde(rename = "Q")]
    pub process_noise: ProcessNoise,
    /// Range measurement variance, m².
    #[serde(rename = "R")]
    pub range_variance: f64,
    pub priors: Priors,
    pub estimators: Vec<EstimatorKind>,
    #[serde(with = "prior_mode_serde")]
    pub prior_mode: PriorMode,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            steps: 1000,
            w: 10,
            seed: 0,
            runs: 100,
            truth_mode: TruthMode::Sampled,
            process_noise: ProcessNoise {
                x: 0.005 * 0.005,
                xdot: 0.005 * 0.005,
            },
            range_variance: 9.0,
            priors: Priors {
                x: -100.0,
                xdot: 200.0,
                h: 2000.0,
                p_x: 49.0,
                p_xdot: 49.0,
                p_h: 49.0,
            },
            estimators: vec![EstimatorKind::Ekf, EstimatorKind::Gssm],
            prior_mode: PriorMode::BlockDiagonal,
        }
    }
}

mod prior_mode_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::factor::PriorMode;

    pub fn serialize<S: Serializer>(mode: &PriorMode, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match mode {
            PriorMode::BlockDiagonal => "block-diagonal",
            PriorMode::ExactJoint => "exact-joint",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PriorMode, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("T", self.dt),
            ("R", self.range_variance),
            ("priors.P_x", self.priors.p_x),
            ("priors.P_xdot", self.priors.p_xdot),
            ("priors.P_h", self.priors.p_h),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {value}")));
            }
        }
        for (name, value) in [("Q.x", self.process_noise.x), ("Q.xdot", self.process_noise.xdot)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be non-negative, got {value}"
                )));
            }
        }
        if self.w == 0 {
            return Err(Error::InvalidArgument("w must be at least 1".into()));
        }
        Ok(())
    }
}
