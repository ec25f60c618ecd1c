//! Causal rules `H1 ∧ … ∧ Hk → C` and indexed rule collections.

use std::collections::HashSet;

use crate::context::{Context, Literal, LiteralSet};
use crate::error::{Error, Result};
use crate::measure::{Conditional, Measure};

/// How rules were admitted during mining.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Exact conditional probabilities under the context's measure.
    Exact,
    /// Each refinement step gated by a one-sided Fisher exact test.
    #[default]
    Fisher,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "exact" => Ok(Mode::Exact),
            "fisher" => Ok(Mode::Fisher),
            other => Err(Error::Config(format!("unknown mode {other:?}, expected exact or fisher"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CausalRule {
    pub premise: LiteralSet,
    pub conclusion: Literal,
    /// Objects satisfying the premise.
    pub n_premise: u64,
    /// Objects satisfying premise and conclusion.
    pub n_both: u64,
    pub eta: f64,
    /// Fisher p-value of the last refinement step; `None` for exact-mode rules.
    pub p_value: Option<f64>,
    /// Length of the refinement chain that produced the rule.
    pub chain_len: usize,
}

impl CausalRule {
    /// Rule with counts and `η` evaluated on `ctx`.
    pub fn evaluate(ctx: &Context, measure: &Measure, premise: LiteralSet, conclusion: Literal) -> Result<CausalRule> {
        check_shape(&premise, conclusion)?;
        let ext = ctx.extent(premise.as_slice());
        let both = ext.and(ctx.literal_extent(conclusion));
        let cond = Conditional {
            both: measure.mass(&both),
            premise: measure.mass(&ext),
        };
        let eta = cond.value().ok_or(Error::UndefinedEta)?;
        Ok(CausalRule {
            premise,
            conclusion,
            n_premise: ext.count() as u64,
            n_both: both.count() as u64,
            eta,
            p_value: None,
            chain_len: 0,
        })
    }

    pub fn key(&self) -> (Literal, &LiteralSet) {
        (self.conclusion, &self.premise)
    }

    pub fn describe(&self, ctx: &Context) -> String {
        let premise: Vec<String> = self.premise.iter().map(|l| ctx.literal_label(l)).collect();
        format!("{} -> {}", premise.join(" & "), ctx.literal_label(self.conclusion))
    }
}

fn check_shape(premise: &LiteralSet, conclusion: Literal) -> Result<()> {
    if premise.contains(conclusion) || premise.contains(!conclusion) {
        return Err(Error::InvalidRule(format!(
            "conclusion {conclusion:?} or its negation appears in the premise {premise:?}"
        )));
    }
    if !premise.is_consistent() {
        return Err(Error::InvalidRule(format!("inconsistent premise {premise:?}")));
    }
    Ok(())
}

/// `R1 ⊏ R2`: same conclusion and strictly smaller premise.
pub fn is_subrelation(r1: &CausalRule, r2: &CausalRule) -> bool {
    r1.conclusion == r2.conclusion && r1.premise.len() < r2.premise.len() && r1.premise.is_subset(&r2.premise)
}

fn conditional(ctx: &Context, measure: &Measure, rule: &CausalRule) -> Conditional {
    Conditional::of(ctx, measure, rule.premise.as_slice(), rule.conclusion)
}

/// `R2 < R1`: `R2 ⊏ R1` and `η(R1) > η(R2)`, evaluated on the context.
pub fn refines(ctx: &Context, measure: &Measure, r1: &CausalRule, r2: &CausalRule) -> Result<bool> {
    let c1 = conditional(ctx, measure, r1);
    let c2 = conditional(ctx, measure, r2);
    if !c1.is_defined() || !c2.is_defined() {
        return Err(Error::UndefinedEta);
    }
    Ok(is_subrelation(r2, r1) && c1.compare(&c2).is_gt())
}

/// Largest premise accepted by [`is_probabilistic_causal`] (2^k subset check).
pub const CAUSAL_CHECK_MAX_PREMISE: usize = 20;

/// Every proper sub-premise rule has strictly smaller `η`. A sub-premise
/// with zero measure makes the check fail.
pub fn is_probabilistic_causal(ctx: &Context, measure: &Measure, rule: &CausalRule) -> Result<bool> {
    let k = rule.premise.len();
    if k > CAUSAL_CHECK_MAX_PREMISE {
        return Err(Error::Config(format!(
            "causal check limited to premises of {CAUSAL_CHECK_MAX_PREMISE} literals, got {k}"
        )));
    }
    let full = conditional(ctx, measure, rule);
    if !full.is_defined() {
        return Err(Error::UndefinedEta);
    }
    let lits = rule.premise.as_slice();
    for mask in 0..(1u32 << k) - 1 {
        let sub: Vec<Literal> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| lits[i]).collect();
        let c = Conditional::of(ctx, measure, &sub, rule.conclusion);
        if !c.is_defined() || !full.compare(&c).is_gt() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Mined rules with lookup by conclusion and by premise literal.
#[derive(Clone, Debug, Default)]
pub struct RuleSet {
    rules: Vec<CausalRule>,
    n_literals: usize,
    by_conclusion: Vec<Vec<usize>>,
    by_premise_literal: Vec<Vec<usize>>,
    pub mode: Mode,
    pub alpha: f64,
    pub max_premise_len: usize,
}

impl RuleSet {
    /// Rejects duplicate `(premise, conclusion)` pairs and malformed rules.
    pub fn new(n_literals: usize, rules: Vec<CausalRule>, mode: Mode, alpha: f64, max_premise_len: usize) -> Result<RuleSet> {
        let mut seen = HashSet::new();
        let mut by_conclusion = vec![Vec::new(); n_literals];
        let mut by_premise_literal = vec![Vec::new(); n_literals];
        for (i, r) in rules.iter().enumerate() {
            check_shape(&r.premise, r.conclusion)?;
            let out_of_range = r.conclusion.code() >= n_literals || r.premise.iter().any(|l| l.code() >= n_literals);
            if out_of_range {
                return Err(Error::InvalidRule(format!("rule {i} refers to an unknown atom")));
            }
            if !seen.insert((r.conclusion, r.premise.clone())) {
                return Err(Error::DuplicateRule(format!("{:?} -> {:?}", r.premise, r.conclusion)));
            }
            by_conclusion[r.conclusion.code()].push(i);
            for l in r.premise.iter() {
                by_premise_literal[l.code()].push(i);
            }
        }
        Ok(RuleSet {
            rules,
            n_literals,
            by_conclusion,
            by_premise_literal,
            mode,
            alpha,
            max_premise_len,
        })
    }

    pub fn empty(n_literals: usize) -> RuleSet {
        RuleSet::new(n_literals, Vec::new(), Mode::Exact, 0.0, 0).expect("empty rule set is valid")
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn n_literals(&self) -> usize {
        self.n_literals
    }

    pub fn rules(&self) -> &[CausalRule] {
        &self.rules
    }

    pub fn get(&self, id: usize) -> &CausalRule {
        &self.rules[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CausalRule> {
        self.rules.iter()
    }

    pub fn with_conclusion(&self, lit: Literal) -> &[usize] {
        &self.by_conclusion[lit.code()]
    }

    pub fn with_premise_literal(&self, lit: Literal) -> &[usize] {
        &self.by_premise_literal[lit.code()]
    }

    /// Ids of rules whose premise is contained in `literals`, ascending.
    pub fn fired_by(&self, literals: &LiteralSet) -> Vec<usize> {
        let bits = literals.to_bits(self.n_literals);
        let mut out: Vec<usize> = self
            .rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.premise.iter().all(|l| bits.contains(l.code())))
            .map(|(i, _)| i)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn into_rules(self) -> Vec<CausalRule> {
        self.rules
    }
}
