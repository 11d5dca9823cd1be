use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::field::{check_assumptions, CovarianceModel, Verdict};
use crate::patterns::SearchCaps;
use crate::theory::{level_schedule, params_for_model};

/// Version of the experiment config and row layout.
pub const CONFIG_VERSION: u32 = 1;

/// `ν` as a function of the window, with `log(2n+1)^d = d log(2n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NuSchedule {
    Constant {
        nu: f64,
    },
    /// `ν = c log(2n+1)^d`.
    PlusLog {
        c: f64,
    },
    /// `ν = -c log(2n+1)^d`.
    MinusLog {
        c: f64,
    },
}

impl NuSchedule {
    pub fn nu(&self, d: usize, n: usize) -> f64 {
        let log_sites = d as f64 * ((2 * n + 1) as f64).ln();
        match *self {
            NuSchedule::Constant { nu } => nu,
            NuSchedule::PlusLog { c } => c * log_sites,
            NuSchedule::MinusLog { c } => -c * log_sites,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            NuSchedule::Constant { nu } => format!("nu={nu}"),
            NuSchedule::PlusLog { c } => format!("nu=+{c}*log(2n+1)^d"),
            NuSchedule::MinusLog { c } => format!("nu=-{c}*log(2n+1)^d"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LevelMode {
    Fixed { u: f64 },
    Schedule { schedule: NuSchedule },
}

impl LevelMode {
    pub fn label(&self) -> String {
        match self {
            LevelMode::Fixed { u } => format!("u={u}"),
            LevelMode::Schedule { schedule } => schedule.label(),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_resamples() -> usize {
    2000
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

/// A replicate experiment over window radii and degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub model: CovarianceModel,
    pub ks: Vec<usize>,
    pub ns: Vec<usize>,
    pub level: LevelMode,
    pub replicates: u64,
    pub seed: u64,
    #[serde(default)]
    pub caps: SearchCaps,
    /// Compute `N`, `L`, `D` and the sandwich checks, not only `β` and `S`.
    #[serde(default = "default_true")]
    pub approximators: bool,
    /// Failed replicates tolerated before the run aborts; unlimited when absent.
    #[serde(default)]
    pub failure_budget: Option<u64>,
    /// Run even when a field assumption fails for a requested degree.
    #[serde(default)]
    pub override_assumptions: bool,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

/// Position of `C` in `ν = -C log(2n+1)^d` relative to the normal-limit window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltWindow {
    pub k: usize,
    pub c: f64,
    pub c_nu: Option<f64>,
    /// `0 < C < C^ν_k`.
    pub inside: bool,
}

impl ExperimentConfig {
    pub fn new(
        model: CovarianceModel,
        ks: Vec<usize>,
        ns: Vec<usize>,
        level: LevelMode,
        replicates: u64,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            model,
            ks,
            ns,
            level,
            replicates,
            seed,
            caps: SearchCaps::default(),
            approximators: true,
            failure_budget: None,
            override_assumptions: false,
            bootstrap_resamples: default_resamples(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(serde_json::to_string(self).expect("config serializes").as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn d(&self) -> usize {
        self.model.d
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(format!("version: expected {CONFIG_VERSION}, got {}", self.version)));
        }
        self.model.validate()?;
        if self.ks.is_empty() || self.ns.is_empty() {
            return Err(invalid("ks and ns must be non-empty"));
        }
        if let Some(k) = self.ks.iter().find(|&&k| k >= self.d()) {
            return Err(invalid(format!("ks: degree {k} needs k < d = {}", self.d())));
        }
        match self.level {
            LevelMode::Fixed { u } if !(u.is_finite()) => return Err(invalid(format!("level.u: {u} is not finite"))),
            LevelMode::Schedule { schedule } => {
                let bad = match schedule {
                    NuSchedule::Constant { nu } => !nu.is_finite(),
                    NuSchedule::PlusLog { c } | NuSchedule::MinusLog { c } => !(c.is_finite() && c >= 0.0),
                };
                if bad {
                    return Err(invalid(
                        "level.schedule: coefficient must be finite (and non-negative for log schedules)",
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Level used for degree `k` at radius `n`.
    pub fn level_for(&self, n: usize, k: usize) -> Result<f64> {
        match self.level {
            LevelMode::Fixed { u } => Ok(u),
            LevelMode::Schedule { schedule } => {
                let params = params_for_model(&self.model, k)?;
                level_schedule(&params, n, schedule.nu(self.d(), n))
            }
        }
    }

    /// Failed assumptions for the requested degrees; an error unless
    /// overridden, otherwise returned as warnings.
    pub fn assumption_warnings(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for &k in &self.ks {
            let report = check_assumptions(&self.model, k);
            for c in report.checks.iter().filter(|c| c.verdict != Verdict::Holds) {
                out.push(format!("k = {k}: assumption {} is {:?}: {}", c.id, c.verdict, c.detail));
            }
        }
        if !out.is_empty() && !self.override_assumptions {
            return Err(Error::InvalidParameter(format!(
                "assumptions fail (set override_assumptions to run anyway): {}",
                out.join("; ")
            )));
        }
        Ok(out)
    }

    /// For `ν = -C log(2n+1)^d`, where `C` sits relative to `C^ν_k`.
    pub fn clt_window(&self) -> Result<Vec<CltWindow>> {
        let LevelMode::Schedule { schedule: NuSchedule::MinusLog { c } } = self.level else {
            return Ok(Vec::new());
        };
        self.ks
            .iter()
            .map(|&k| {
                let c_nu = params_for_model(&self.model, k)?.c_nu;
                Ok(CltWindow { k, c, c_nu, inside: c > 0.0 && c_nu.is_some_and(|x| c < x) })
            })
            .collect()
    }
}
