//! TOML configuration with one table per parameter group. Missing keys
//! keep their defaults; unknown keys are rejected.
//!
//! ```toml
//! [engine]
//! beam_width = 50
//! candidate_order = "rank_after_exclusion"
//!
//! [guard]
//! tail_fraction = 0.15
//!
//! [arena]
//! soft_k = 5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::read_to_string;
use crate::arena::ArenaParams;
use crate::error::{Error, Result};
use crate::guard::GuardParams;
use crate::types::EngineParams;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub engine: EngineParams,
    pub guard: GuardParams,
    pub arena: ArenaParams,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.engine.validate()?;
        self.guard.validate()
    }
}

pub fn load_config(path: &Path) -> Result<Config> {
    Config::from_toml(&read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::CandidateOrder;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn partial_tables_override_fields() {
        let c = Config::from_toml(
            "[engine]\nbeam_width = 7\ncandidate_order = \"top_m_then_exclude\"\n[guard]\nknn_k = 2\n",
        )
        .unwrap();
        assert_eq!(c.engine.beam_width, 7);
        assert_eq!(c.engine.candidate_order, CandidateOrder::TopMThenExclude);
        assert_eq!(c.engine.top_m, 20);
        assert_eq!(c.guard.knn_k, 2);
    }

    #[test]
    fn unknown_and_invalid_keys_fail() {
        assert!(Config::from_toml("[engine]\nbeam_widht = 7\n").is_err());
        assert!(Config::from_toml("[engine]\neta = 1.5\n").is_err());
    }
}
