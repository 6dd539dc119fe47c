use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Policies;
use crate::topology::CoordRange;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Independent recalls from each source of the stimulus pair.
    #[default]
    Single,
    /// One dual-source run per stored memory.
    Interplay,
}

fn default_n() -> usize {
    20
}

fn default_m() -> usize {
    3
}

fn default_true() -> bool {
    true
}

/// Batch description. Everything a batch produces is a function of this
/// value alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub range: CoordRange,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub policies: Policies,
    /// Also run synchronous Hopfield iteration from the same cues.
    #[serde(default = "default_true")]
    pub hopfield_baseline: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            n: default_n(),
            m: default_m(),
            range: CoordRange::default(),
            master_seed: 0,
            mode: Mode::default(),
            policies: Policies::default(),
            hopfield_baseline: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: &str| Err(Error::Invalid(format!("{field}: {msg}")));
        if self.trials == 0 {
            return fail("trials", "must be at least 1");
        }
        if self.n < 2 {
            return fail("n", "need at least 2 neurons");
        }
        if self.m == 0 {
            return fail("m", "need at least 1 memory");
        }
        if self.range.hi < self.range.lo {
            return fail("range", "upper bound below lower bound");
        }
        Ok(())
    }

    /// Parses and validates a JSON config. Errors name the offending field
    /// path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Invalid(format!("{path}: {inner}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Invalid(msg) => Error::Invalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}
