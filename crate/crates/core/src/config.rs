//! Run parameters shared by the command-line subcommands.

use crate::error::{Error, Result};
use crate::measure::DEFAULT_EPSILON;
use crate::miner::MineConfig;
use crate::rules::Mode;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub max_premise_len: usize,
    pub mode: Mode,
    pub mscr_strict: bool,
    pub beam_width: Option<usize>,
    pub seed: u64,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.01,
            epsilon: DEFAULT_EPSILON,
            max_premise_len: 5,
            mode: Mode::Fisher,
            mscr_strict: false,
            beam_width: Some(8),
            seed: 1,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must be in (0, 1), got {}", self.epsilon)));
        }
        if self.beam_width == Some(0) {
            return Err(Error::Config("beam width must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        Ok(())
    }

    pub fn mine_config(&self) -> MineConfig {
        MineConfig {
            mode: self.mode,
            alpha: self.alpha,
            max_premise_len: self.max_premise_len,
            beam_width: self.beam_width,
            mscr_strict: self.mscr_strict,
            ..MineConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.mine_config().alpha, 0.01);
    }

    #[test]
    fn bounds() {
        for (alpha, epsilon) in [(1.5, 1e-4), (0.0, 1e-4), (0.01, 0.0), (0.01, 1.0)] {
            let c = RunConfig {
                alpha,
                epsilon,
                ..RunConfig::default()
            };
            assert!(matches!(c.validate(), Err(Error::Config(_))));
        }
    }
}
