//! Rule search by semantic probabilistic inference.
//!
//! For a conclusion `C` the search starts from the empty-premise rule and
//! refines premises while the conditional probability of `C` strictly
//! increases. Terminal rules (no admissible refinement) are collected.
//!
//! * [`Mode::Exact`] enumerates every premise up to `max_premise_len`
//!   and keeps the strongest probabilistic causal rules: rules whose every
//!   proper sub-premise has strictly smaller `η`, and which are not contained
//!   in another such rule.
//! * [`Mode::Fisher`] grows premises one literal at a time, admitting a
//!   step only when the added literal is positively associated with `C`
//!   inside the current premise at significance `alpha`.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::bitset::BitSet;
use crate::context::{Context, Literal, LiteralSet};
use crate::error::{Error, Result};
use crate::measure::{fisher_one_sided, Conditional, ContingencyTable2x2, Measure};
use crate::rules::{CausalRule, Mode, RuleSet};

/// Exact search refuses contexts with more atoms than this.
pub const EXACT_ATOM_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct MineConfig {
    pub mode: Mode,
    pub alpha: f64,
    pub max_premise_len: usize,
    /// Fisher mode: keep at most this many refinements per premise, the
    /// most significant first.
    pub beam_width: Option<usize>,
    /// Keep only the highest-`η` terminal rules per conclusion.
    pub mscr_strict: bool,
    /// Fisher mode: abort a conclusion after visiting this many premises.
    pub node_limit: usize,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            mode: Mode::Fisher,
            alpha: 0.01,
            max_premise_len: 5,
            beam_width: None,
            mscr_strict: false,
            node_limit: 2_000_000,
        }
    }
}

impl MineConfig {
    pub fn exact(max_premise_len: usize) -> Self {
        MineConfig {
            mode: Mode::Exact,
            max_premise_len,
            ..MineConfig::default()
        }
    }

    pub fn fisher(alpha: f64, max_premise_len: usize) -> Self {
        MineConfig {
            mode: Mode::Fisher,
            alpha,
            max_premise_len,
            ..MineConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == Mode::Fisher && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.beam_width == Some(0) {
            return Err(Error::Config("beam width must be positive".into()));
        }
        Ok(())
    }
}

struct Found {
    rule: CausalRule,
    cond: Conditional,
}

/// Terminal rules of the inference tree for `conclusion`, ordered by premise.
pub fn spi_chains(ctx: &Context, measure: &Measure, conclusion: Literal, config: &MineConfig) -> Result<Vec<CausalRule>> {
    check_preconditions(ctx, measure, config)?;
    let found = match config.mode {
        Mode::Exact => exact_terminals(ctx, measure, conclusion, config.max_premise_len)?,
        Mode::Fisher => fisher_terminals(ctx, conclusion, config)?,
    };
    Ok(found.into_iter().map(|f| f.rule).collect())
}

fn check_preconditions(ctx: &Context, measure: &Measure, config: &MineConfig) -> Result<()> {
    config.validate()?;
    measure.check(ctx)?;
    match config.mode {
        Mode::Exact if ctx.n_atoms() > EXACT_ATOM_LIMIT => Err(Error::ExactSearchTooLarge {
            atoms: ctx.n_atoms(),
            limit: EXACT_ATOM_LIMIT,
        }),
        Mode::Fisher if !measure.is_uniform() => Err(Error::FisherNeedsUniform),
        _ => Ok(()),
    }
}

/// Mines terminal rules for every literal of the context, both signs of
/// every atom. Output is sorted by conclusion, then premise.
pub fn mine_mscr(ctx: &Context, measure: &Measure, config: &MineConfig) -> Result<RuleSet> {
    check_preconditions(ctx, measure, config)?;
    let n_literals = ctx.n_literals();
    if ctx.n_objects() == 0 {
        return RuleSet::new(n_literals, Vec::new(), config.mode, config.alpha, config.max_premise_len);
    }
    let per_conclusion: Vec<Vec<Found>> = (0..n_literals)
        .into_par_iter()
        .map(|code| {
            let c = Literal::from_code(code);
            let mut found = match config.mode {
                Mode::Exact => exact_terminals(ctx, measure, c, config.max_premise_len)?,
                Mode::Fisher => fisher_terminals(ctx, c, config)?,
            };
            if config.mscr_strict {
                keep_maximal_eta(&mut found);
            }
            Ok(found)
        })
        .collect::<Result<_>>()?;
    let rules: Vec<CausalRule> = per_conclusion
        .into_iter()
        .flat_map(|v| v.into_iter().map(|f| f.rule))
        .collect();
    RuleSet::new(n_literals, rules, config.mode, config.alpha, config.max_premise_len)
}

fn keep_maximal_eta(found: &mut Vec<Found>) {
    let Some(best) = found
        .iter()
        .map(|f| f.cond)
        .max_by(|a, b| a.compare(b))
    else {
        return;
    };
    found.retain(|f| f.cond.compare(&best).is_eq());
}

fn candidates(ctx: &Context, conclusion: Literal) -> Vec<Literal> {
    ctx.literals().filter(|l| l.atom() != conclusion.atom()).collect()
}

fn exact_terminals(ctx: &Context, measure: &Measure, conclusion: Literal, max_len: usize) -> Result<Vec<Found>> {
    let col_c = ctx.literal_extent(conclusion);
    let cands = candidates(ctx, conclusion);
    let mut search = ExactSearch {
        ctx,
        measure,
        col_c,
        cands: &cands,
        max_len,
        memo: HashMap::new(),
        causal: Vec::new(),
    };
    let root = ctx.all_objects();
    if search.conditional_of(&root).premise == 0.0 {
        return Err(Error::UndefinedEta);
    }
    let mut prefix = Vec::new();
    search.visit(&mut prefix, root, 0);

    let ExactSearch { causal, memo, .. } = search;
    let causal_set: HashSet<&[Literal]> = causal.iter().map(|(p, _, _)| p.as_slice()).collect();
    let mut dominated: HashSet<Vec<Literal>> = HashSet::new();
    let mut chain: HashMap<&[Literal], usize> = HashMap::new();
    let mut order: Vec<usize> = (0..causal.len()).collect();
    order.sort_by_key(|&i| causal[i].0.len());
    for &i in &order {
        let premise = &causal[i].0;
        let mut longest = 0;
        for sub in proper_subsets(premise) {
            if causal_set.contains(sub.as_slice()) {
                longest = longest.max(chain[sub.as_slice()] + 1);
                dominated.insert(sub);
            }
        }
        chain.insert(premise.as_slice(), longest);
    }
    drop(memo);

    let mut out: Vec<Found> = causal
        .iter()
        .filter(|(p, _, _)| !dominated.contains(p))
        .map(|(p, cond, ext)| Found {
            rule: CausalRule {
                premise: p.iter().copied().collect(),
                conclusion,
                n_premise: ext.count() as u64,
                n_both: ext.and_count(col_c) as u64,
                eta: cond.both / cond.premise,
                p_value: None,
                chain_len: chain[p.as_slice()],
            },
            cond: *cond,
        })
        .collect();
    out.sort_by(|a, b| a.rule.premise.cmp(&b.rule.premise));
    Ok(out)
}

fn proper_subsets(premise: &[Literal]) -> impl Iterator<Item = Vec<Literal>> + '_ {
    let k = premise.len();
    (0..(1u32 << k) - 1).map(move |mask| (0..k).filter(|i| mask >> i & 1 == 1).map(|i| premise[i]).collect())
}

struct ExactSearch<'a> {
    ctx: &'a Context,
    measure: &'a Measure,
    col_c: &'a BitSet,
    cands: &'a [Literal],
    max_len: usize,
    memo: HashMap<Vec<Literal>, Conditional>,
    causal: Vec<(Vec<Literal>, Conditional, BitSet)>,
}

impl ExactSearch<'_> {
    fn conditional_of(&self, extent: &BitSet) -> Conditional {
        Conditional {
            both: self.measure.mass(&extent.and(self.col_c)),
            premise: self.measure.mass(extent),
        }
    }

    fn lookup(&mut self, premise: &[Literal]) -> Conditional {
        if let Some(c) = self.memo.get(premise) {
            return *c;
        }
        let c = self.conditional_of(&self.ctx.extent(premise));
        self.memo.insert(premise.to_vec(), c);
        c
    }

    fn is_causal(&mut self, premise: &[Literal], cond: Conditional) -> bool {
        let k = premise.len();
        for mask in 0..(1u32 << k) - 1 {
            let sub: Vec<Literal> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| premise[i]).collect();
            let c = self.lookup(&sub);
            if !c.is_defined() || !cond.compare(&c).is_gt() {
                return false;
            }
        }
        true
    }

    fn visit(&mut self, prefix: &mut Vec<Literal>, extent: BitSet, start: usize) {
        let cond = self.conditional_of(&extent);
        self.memo.insert(prefix.clone(), cond);
        if self.is_causal(prefix, cond) {
            self.causal.push((prefix.clone(), cond, extent.clone()));
        }
        // no superset of an η ∈ {0, 1} premise can raise η
        if prefix.len() >= self.max_len || cond.is_one() || cond.is_zero() {
            return;
        }
        for i in start..self.cands.len() {
            let lit = self.cands[i];
            if prefix.iter().any(|p| p.atom() == lit.atom()) {
                continue;
            }
            let child = extent.and(self.ctx.literal_extent(lit));
            if child.is_empty() {
                continue;
            }
            prefix.push(lit);
            self.visit(prefix, child, i + 1);
            prefix.pop();
        }
    }
}

struct FisherNode {
    best_p: f64,
    n_premise: u64,
    n_both: u64,
    terminal: bool,
}

fn fisher_terminals(ctx: &Context, conclusion: Literal, config: &MineConfig) -> Result<Vec<Found>> {
    let n = ctx.n_objects() as u64;
    if n == 0 {
        return Err(Error::UndefinedEta);
    }
    let col_c = ctx.literal_extent(conclusion);
    let cands = candidates(ctx, conclusion);
    let mut nodes: HashMap<Vec<Literal>, FisherNode> = HashMap::new();
    let mut stack: Vec<(Vec<Literal>, BitSet)> = vec![(Vec::new(), ctx.all_objects())];
    nodes.insert(
        Vec::new(),
        FisherNode {
            best_p: 1.0,
            n_premise: n,
            n_both: col_c.count() as u64,
            terminal: false,
        },
    );

    while let Some((premise, extent)) = stack.pop() {
        let (n_prem, n_both) = {
            let node = &nodes[&premise];
            (node.n_premise, node.n_both)
        };
        let mut admissible: Vec<(f64, Literal, BitSet, u64, u64)> = Vec::new();
        if premise.len() < config.max_premise_len {
            let ext_c = extent.and(col_c);
            for &lit in &cands {
                if premise.iter().any(|p| p.atom() == lit.atom()) {
                    continue;
                }
                let col = ctx.literal_extent(lit);
                let row = extent.and_count(col) as u64;
                if row == 0 || row == n_prem {
                    continue;
                }
                let n11 = ext_c.and_count(col) as u64;
                // η(P ∧ H → C) > η(P → C)
                if (n11 as u128) * (n_prem as u128) <= (n_both as u128) * (row as u128) {
                    continue;
                }
                let table = ContingencyTable2x2::new(n11, row - n11, n_both - n11, n_prem - row - (n_both - n11));
                let p = fisher_one_sided(&table)?;
                if p < config.alpha {
                    admissible.push((p, lit, extent.and(col), row, n11));
                }
            }
        }
        admissible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some(w) = config.beam_width {
            admissible.truncate(w);
        }
        if admissible.is_empty() {
            nodes.get_mut(&premise).expect("visited").terminal = true;
            continue;
        }
        for (p, lit, child_ext, row, n11) in admissible {
            let mut child = premise.clone();
            let pos = child.partition_point(|&l| l < lit);
            child.insert(pos, lit);
            match nodes.get_mut(&child) {
                Some(node) => node.best_p = node.best_p.min(p),
                None => {
                    nodes.insert(
                        child.clone(),
                        FisherNode {
                            best_p: p,
                            n_premise: row,
                            n_both: n11,
                            terminal: false,
                        },
                    );
                    stack.push((child, child_ext));
                }
            }
        }
        if nodes.len() > config.node_limit {
            return Err(Error::SearchBudgetExceeded {
                conclusion: ctx.literal_label(conclusion),
                limit: config.node_limit,
            });
        }
    }

    let mut out: Vec<Found> = nodes
        .into_iter()
        // the unrefined root carries no significance test and is not admitted
        .filter(|(p, node)| node.terminal && !p.is_empty())
        .map(|(p, node)| {
            let chain_len = p.len();
            Found {
                rule: CausalRule {
                    premise: p.into_iter().collect::<LiteralSet>(),
                    conclusion,
                    n_premise: node.n_premise,
                    n_both: node.n_both,
                    eta: node.n_both as f64 / node.n_premise as f64,
                    p_value: Some(node.best_p),
                    chain_len,
                },
                cond: Conditional {
                    both: node.n_both as f64,
                    premise: node.n_premise as f64,
                },
            }
        })
        .collect();
    out.sort_by(|a, b| a.rule.premise.cmp(&b.rule.premise));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::is_probabilistic_causal;
    use crate::testutil::ctx_a;

    const A: Literal = Literal::positive(0);
    const B: Literal = Literal::positive(1);
    const C: Literal = Literal::positive(2);

    fn set(lits: &[Literal]) -> LiteralSet {
        lits.iter().copied().collect()
    }

    #[test]
    fn exact_terminals_for_b() {
        let ctx = ctx_a();
        let rules = spi_chains(&ctx, &Measure::uniform(), B, &MineConfig::exact(3)).unwrap();
        let premises: Vec<LiteralSet> = rules.iter().map(|r| r.premise.clone()).collect();
        assert_eq!(premises, vec![set(&[A]), set(&[C])]);
        assert!(rules.iter().all(|r| r.eta == 1.0 && r.chain_len == 1));
    }

    #[test]
    fn exact_terminals_for_c() {
        // ∅ → c (1/2) < b → c (2/3) < ¬a ∧ b → c (1)
        let ctx = ctx_a();
        let rules = spi_chains(&ctx, &Measure::uniform(), C, &MineConfig::exact(3)).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].premise, set(&[!A, B]));
        assert_eq!(rules[0].chain_len, 2);
        assert_eq!((rules[0].n_premise, rules[0].n_both), (1, 1));
    }

    #[test]
    fn constant_conclusion_keeps_empty_premise() {
        let rows = vec![
            ("x".to_string(), vec![true, false]),
            ("y".to_string(), vec![true, true]),
            ("z".to_string(), vec![true, false]),
        ];
        let ctx = Context::from_boolean_rows(&["k", "v"], &rows).unwrap();
        let rules = spi_chains(&ctx, &Measure::uniform(), Literal::positive(0), &MineConfig::exact(3)).unwrap();
        assert_eq!(rules.len(), 1);
        assert!(rules[0].premise.is_empty());
        assert_eq!(rules[0].eta, 1.0);
    }

    #[test]
    fn exact_rules_are_causal() {
        let ctx = ctx_a();
        let m = Measure::uniform();
        let rs = mine_mscr(&ctx, &m, &MineConfig::exact(3)).unwrap();
        assert!(!rs.is_empty());
        for r in rs.iter() {
            assert!(is_probabilistic_causal(&ctx, &m, r).unwrap(), "{}", r.describe(&ctx));
        }
        let keys: Vec<_> = rs.iter().map(|r| (r.conclusion, r.premise.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn strict_keeps_maximal_eta() {
        let ctx = ctx_a();
        let cfg = MineConfig {
            mscr_strict: true,
            ..MineConfig::exact(3)
        };
        let rs = mine_mscr(&ctx, &Measure::uniform(), &cfg).unwrap();
        for c in ctx.literals() {
            let etas: Vec<f64> = rs.with_conclusion(c).iter().map(|&i| rs.get(i).eta).collect();
            assert!(etas.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn exact_refuses_large_contexts() {
        let names: Vec<String> = (0..21).map(|i| format!("a{i}")).collect();
        let ctx = Context::from_boolean_rows(&names, &[("o".to_string(), vec![true; 21])]).unwrap();
        assert!(matches!(
            mine_mscr(&ctx, &Measure::uniform(), &MineConfig::exact(2)),
            Err(Error::ExactSearchTooLarge { atoms: 21, .. })
        ));
    }

    #[test]
    fn fisher_needs_uniform_measure() {
        let ctx = ctx_a();
        let m = Measure::from_weights(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(
            mine_mscr(&ctx, &m, &MineConfig::fisher(0.05, 3)),
            Err(Error::FisherNeedsUniform)
        ));
        assert!(mine_mscr(&ctx, &m, &MineConfig::exact(3)).is_ok());
    }

    fn two_blocks(copies: usize) -> Context {
        // two prototypes over four boolean attributes
        let mut rows = Vec::new();
        for i in 0..copies {
            rows.push((format!("p{i}"), vec![true, true, false, false]));
            rows.push((format!("q{i}"), vec![false, false, true, true]));
        }
        Context::from_boolean_rows(&["w", "x", "y", "z"], &rows).unwrap()
    }

    #[test]
    fn fisher_rules_pass_the_gate() {
        let ctx = two_blocks(10);
        let rs = mine_mscr(&ctx, &Measure::uniform(), &MineConfig::fisher(0.01, 3)).unwrap();
        assert!(!rs.is_empty());
        for r in rs.iter() {
            assert!(r.p_value.unwrap() < 0.01);
            assert_eq!(r.eta, 1.0);
            assert_eq!(r.chain_len, r.premise.len());
        }
        // w → x is found; with 3 copies the association is not significant at 0.01
        let w_x = rs
            .with_conclusion(Literal::positive(1))
            .iter()
            .any(|&i| rs.get(i).premise == set(&[Literal::positive(0)]));
        assert!(w_x);
        let small = mine_mscr(&two_blocks(3), &Measure::uniform(), &MineConfig::fisher(0.01, 3)).unwrap();
        assert!(small.is_empty());
    }

    #[test]
    fn beam_limits_branching() {
        let ctx = two_blocks(10);
        let cfg = MineConfig {
            beam_width: Some(1),
            ..MineConfig::fisher(0.01, 3)
        };
        let rs = mine_mscr(&ctx, &Measure::uniform(), &cfg).unwrap();
        for c in ctx.literals() {
            assert!(rs.with_conclusion(c).len() <= 1);
        }
    }

    #[test]
    fn alpha_validated() {
        let ctx = ctx_a();
        let cfg = MineConfig::fisher(1.5, 3);
        assert!(matches!(mine_mscr(&ctx, &Measure::uniform(), &cfg), Err(Error::Config(_))));
    }
}
