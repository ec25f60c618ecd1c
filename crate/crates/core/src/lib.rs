//! Probabilistic causal rule mining over categorical data and discovery of
//! fixed-point concepts of the consistency-maximising prediction operator.

pub mod bitset;
pub mod config;
pub mod context;
pub mod error;
pub mod fixpoint;
pub mod io;
pub mod measure;
pub mod miner;
pub mod oracle;
pub mod rules;
pub mod synth;

pub use bitset::BitSet;
pub use config::RunConfig;
pub use context::{build_context, BooleanEncoding, Context, Literal, LiteralSet, Row, Schema};
pub use error::{Error, Result};
pub use fixpoint::{closure, cluster, int_criterion, predict_step, upsilon_fixpoint, upsilon_step, FixedPointConcept, PredictionState};
pub use measure::{eta, fisher_one_sided, gamma, nu, ContingencyTable2x2, Measure};
pub use miner::{mine_mscr, spi_chains, MineConfig};
pub use oracle::{brute_force_causal_rules, brute_force_terminals, verify_theorems, OracleBudget};
pub use rules::{CausalRule, Mode, RuleSet};
pub use synth::{generate_synthetic, SyntheticSpec};

#[cfg(test)]
pub(crate) mod testutil {
    use crate::context::Context;

    /// g1 = {a, b, c}, g2 = {a, b}, g3 = {b, c}, g4 = {}.
    pub(crate) fn ctx_a() -> Context {
        let rows = vec![
            ("g1".to_string(), vec![true, true, true]),
            ("g2".to_string(), vec![true, true, false]),
            ("g3".to_string(), vec![false, true, true]),
            ("g4".to_string(), vec![false, false, false]),
        ];
        Context::from_boolean_rows(&["a", "b", "c"], &rows).expect("valid context")
    }
}
