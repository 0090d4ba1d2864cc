//! Run configuration shared by every subcommand.

use thiserror::Error;
use traptp_core::traptp::Budgets;

/// Environment variable that, when set, replaces `--seed`.
pub const SEED_ENV: &str = "TRAPTP_SEED";

/// Largest budgets accepted from the command line.
pub const MAX_BUDGETS: Budgets = Budgets { t: 32, p: 256, h: 256 };

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{SEED_ENV}={0:?} is not an unsigned integer")]
    BadSeed(String),
    #[error("level {0} unsupported: quantum runs use level 1")]
    BadLevel(u8),
    #[error("budgets {0} exceed the cap t<={t}, p<={p}, h<={h}", t = MAX_BUDGETS.t, p = MAX_BUDGETS.p, h = MAX_BUDGETS.h)]
    BudgetCap(String),
    #[error("budgets: {0}")]
    BadBudgets(String),
    #[error("trial count must be positive")]
    NoTrials,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub seed: u64,
    pub level: u8,
    pub budgets: Budgets,
    pub trials: Option<u64>,
    pub adversary: String,
    pub addr: String,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            level: 1,
            budgets: Budgets::new(2, 2, 2),
            trials: None,
            adversary: "honest".into(),
            addr: "127.0.0.1:7878".into(),
        }
    }
}

/// `--seed`, unless the environment value is present.
pub fn resolve_seed(flag: u64, env: Option<&str>) -> Result<u64, ConfigError> {
    match env {
        Some(v) => v.trim().parse().map_err(|_| ConfigError::BadSeed(v.to_string())),
        None => Ok(flag),
    }
}

pub fn parse_budgets(s: &str) -> Result<Budgets, ConfigError> {
    Budgets::parse(s).map_err(|e| ConfigError::BadBudgets(e.to_string()))
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.level != 1 {
            return Err(ConfigError::BadLevel(self.level));
        }
        let b = self.budgets;
        if b.t > MAX_BUDGETS.t || b.p > MAX_BUDGETS.p || b.h > MAX_BUDGETS.h {
            return Err(ConfigError::BudgetCap(format!("{},{},{}", b.t, b.p, b.h)));
        }
        if self.trials == Some(0) {
            return Err(ConfigError::NoTrials);
        }
        Ok(())
    }

    pub fn trials_or(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_seed_wins() {
        assert_eq!(resolve_seed(5, None), Ok(5));
        assert_eq!(resolve_seed(5, Some("42")), Ok(42));
        assert!(resolve_seed(5, Some("x")).is_err());
    }

    #[test]
    fn caps() {
        let mut c = Config::default();
        assert!(c.validate().is_ok());
        c.level = 2;
        assert_eq!(c.validate(), Err(ConfigError::BadLevel(2)));
        c.level = 1;
        c.budgets = parse_budgets("33,0,0").unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::BudgetCap(_))));
        assert!(parse_budgets("1,2").is_err());
    }
}
