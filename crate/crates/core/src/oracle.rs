//! Brute-force reference implementations for tiny contexts.
//!
//! Everything here enumerates exhaustively, counts objects one by one and
//! shares no search code with [`crate::miner`] or [`crate::fixpoint`], so
//! the two can be checked against each other.

use std::collections::BTreeSet;

use rand::Rng;

use crate::bitset::BitSet;
use crate::context::{Context, Literal, LiteralSet};
use crate::error::{Error, Result};
use crate::fixpoint::{closure, predict_step, upsilon_fixpoint};
use crate::measure::{Measure, DEFAULT_EPSILON};
use crate::miner::{mine_mscr, MineConfig};
use crate::rules::{CausalRule, RuleSet};

/// Largest context the oracle accepts.
pub const MAX_ORACLE_OBJECTS: usize = 8;
pub const MAX_ORACLE_ATOMS: usize = 5;
/// Upper bound on object-level evaluations for one enumeration.
pub const MAX_ORACLE_EVALUATIONS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_objects: usize,
    pub max_atoms: usize,
    pub max_premise: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_objects: MAX_ORACLE_OBJECTS,
            max_atoms: MAX_ORACLE_ATOMS,
            max_premise: 3,
        }
    }
}

impl OracleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_objects == 0 || self.max_atoms == 0 || self.max_premise == 0 {
            return Err(Error::Budget("all budget limits must be positive".into()));
        }
        if self.max_objects > MAX_ORACLE_OBJECTS {
            return Err(Error::Budget(format!(
                "{} objects requested, the oracle is capped at {MAX_ORACLE_OBJECTS}",
                self.max_objects
            )));
        }
        if self.max_atoms > MAX_ORACLE_ATOMS {
            return Err(Error::Budget(format!(
                "{} atoms requested, the oracle is capped at {MAX_ORACLE_ATOMS}",
                self.max_atoms
            )));
        }
        if self.evaluations(self.max_objects, self.max_atoms) > MAX_ORACLE_EVALUATIONS {
            return Err(Error::Budget(format!("enumeration exceeds {MAX_ORACLE_EVALUATIONS} evaluations")));
        }
        Ok(())
    }

    /// Object checks for rule enumeration: every conclusion, every premise
    /// over the other atoms (3 choices each) and every sub-premise.
    fn evaluations(&self, objects: usize, atoms: usize) -> u64 {
        let premises = 3u64.saturating_pow(atoms.saturating_sub(1) as u32);
        let subsets = 1u64 << self.max_premise.min(atoms);
        (2 * atoms as u64)
            .saturating_mul(premises)
            .saturating_mul(subsets)
            .saturating_mul(objects as u64)
    }

    /// Refuses contexts or budgets outside the caps.
    pub fn admit(&self, ctx: &Context) -> Result<()> {
        self.validate()?;
        if ctx.n_objects() > self.max_objects || ctx.n_atoms() > self.max_atoms {
            return Err(Error::Budget(format!(
                "context has {} objects and {} atoms, budget allows {} and {}",
                ctx.n_objects(),
                ctx.n_atoms(),
                self.max_objects,
                self.max_atoms
            )));
        }
        Ok(())
    }
}

/// `(n_premise, n_both)` by scanning objects.
fn counts(ctx: &Context, premise: &[Literal], conclusion: Literal) -> (u64, u64) {
    let mut n_premise = 0;
    let mut n_both = 0;
    for g in 0..ctx.n_objects() {
        if premise.iter().all(|&l| ctx.satisfies(g, l)) {
            n_premise += 1;
            if ctx.satisfies(g, conclusion) {
                n_both += 1;
            }
        }
    }
    (n_premise, n_both)
}

/// Every consistent literal set over `atoms` with at most `max_len` literals.
fn literal_sets(atoms: &[usize], max_len: usize) -> Vec<Vec<Literal>> {
    let mut out = Vec::new();
    let total = 3usize.pow(atoms.len() as u32);
    for mut code in 0..total {
        let mut set = Vec::new();
        for &a in atoms {
            match code % 3 {
                1 => set.push(Literal::positive(a)),
                2 => set.push(Literal::negative(a)),
                _ => {}
            }
            code /= 3;
        }
        if set.len() <= max_len {
            set.sort();
            out.push(set);
        }
    }
    out.sort();
    out
}

fn sub_premises(premise: &[Literal]) -> Vec<Vec<Literal>> {
    let k = premise.len();
    (0..(1usize << k) - 1)
        .map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).map(|i| premise[i]).collect())
        .collect()
}

fn is_causal(ctx: &Context, premise: &[Literal], conclusion: Literal) -> bool {
    let (n, b) = counts(ctx, premise, conclusion);
    if n == 0 {
        return false;
    }
    sub_premises(premise).iter().all(|sub| {
        let (ns, bs) = counts(ctx, sub, conclusion);
        ns > 0 && b * ns > bs * n
    })
}

fn chain_len(causal: &BTreeSet<Vec<Literal>>, premise: &[Literal]) -> usize {
    sub_premises(premise)
        .iter()
        .filter(|s| causal.contains(*s))
        .map(|s| chain_len(causal, s) + 1)
        .max()
        .unwrap_or(0)
}

/// Every rule with at most `max_premise` literals whose sub-premise rules
/// all have defined, strictly smaller probability. Uniform measure.
pub fn brute_force_causal_rules(ctx: &Context, budget: &OracleBudget) -> Result<Vec<CausalRule>> {
    budget.admit(ctx)?;
    let mut out = Vec::new();
    for c in ctx.literals() {
        out.extend(causal_for(ctx, c, budget.max_premise));
    }
    Ok(out)
}

fn causal_for(ctx: &Context, c: Literal, max_premise: usize) -> Vec<CausalRule> {
    let others: Vec<usize> = (0..ctx.n_atoms()).filter(|&a| a != c.atom()).collect();
    let causal: BTreeSet<Vec<Literal>> = literal_sets(&others, max_premise)
        .into_iter()
        .filter(|p| is_causal(ctx, p, c))
        .collect();
    causal
        .iter()
        .map(|p| {
            let (n, b) = counts(ctx, p, c);
            CausalRule {
                premise: p.iter().copied().collect(),
                conclusion: c,
                n_premise: n,
                n_both: b,
                eta: b as f64 / n as f64,
                p_value: None,
                chain_len: chain_len(&causal, p),
            }
        })
        .collect()
}

/// Causal rules with no causal rule of the same conclusion on a strictly
/// larger premise.
pub fn brute_force_terminals(ctx: &Context, budget: &OracleBudget) -> Result<Vec<CausalRule>> {
    let causal = brute_force_causal_rules(ctx, budget)?;
    Ok(causal
        .iter()
        .filter(|r| {
            !causal.iter().any(|s| {
                s.conclusion == r.conclusion && s.premise.len() > r.premise.len() && r.premise.is_subset(&s.premise)
            })
        })
        .cloned()
        .collect())
}

/// Terminal rules of highest probability, per conclusion.
pub fn brute_force_mscr(ctx: &Context, budget: &OracleBudget) -> Result<Vec<CausalRule>> {
    let terminals = brute_force_terminals(ctx, budget)?;
    Ok(terminals
        .iter()
        .filter(|r| {
            !terminals
                .iter()
                .any(|s| s.conclusion == r.conclusion && s.n_both * r.n_premise > r.n_both * s.n_premise)
        })
        .cloned()
        .collect())
}

/// Closure by repeated full prediction until nothing changes.
pub fn naive_closure(rules: &RuleSet, seed: &LiteralSet) -> LiteralSet {
    let mut current = seed.clone();
    loop {
        let next = predict_step(rules, &current);
        if next == current {
            return current;
        }
        current = next;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Property {
    /// The closure of every compatible description holds no complementary pair.
    ClosureConsistent,
    /// Every classical concept sits inside some probabilistic concept.
    ConceptEmbedding,
    /// Every probabilistic extent is the union of the classical extents
    /// whose intents close to its intent.
    ExtentDecomposition,
    /// The consistency climb from a compatible set ends at its closure.
    ClimbMatchesClosure,
    /// Counter-based closure agrees with naive iteration.
    ClosureReference,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::ClosureConsistent,
        Property::ConceptEmbedding,
        Property::ExtentDecomposition,
        Property::ClimbMatchesClosure,
        Property::ClosureReference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::ClosureConsistent => "closure-consistent",
            Property::ConceptEmbedding => "concept-embedding",
            Property::ExtentDecomposition => "extent-decomposition",
            Property::ClimbMatchesClosure => "climb-matches-closure",
            Property::ClosureReference => "closure-reference",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub property: Property,
    pub literals: LiteralSet,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TheoremReport {
    /// Cases checked per property, in [`Property::ALL`] order.
    pub cases: [usize; 5],
    pub failures: Vec<Counterexample>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failures_of(&self, property: Property) -> usize {
        self.failures.iter().filter(|f| f.property == property).count()
    }

    pub fn cases_of(&self, property: Property) -> usize {
        self.cases[property as usize]
    }

    pub fn merge(&mut self, other: TheoremReport) {
        for (a, b) in self.cases.iter_mut().zip(other.cases) {
            *a += b;
        }
        self.failures.extend(other.failures);
    }

    fn check(&mut self, property: Property, ok: bool, literals: &LiteralSet, detail: impl FnOnce() -> String) {
        self.cases[property as usize] += 1;
        if !ok {
            self.failures.push(Counterexample {
                property,
                literals: literals.clone(),
                detail: detail(),
            });
        }
    }
}

/// Deliberate defects for exercising the failure path of the verifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Every mined rule predicts the negation of its conclusion.
    NegatedConclusions,
}

/// Runs every [`Property`] on one context. Rules are the exact-mode
/// terminals of highest probability per conclusion; seeds are all
/// consistent literal sets with non-empty extent.
pub fn verify_theorems(ctx: &Context, budget: &OracleBudget) -> Result<TheoremReport> {
    verify_theorems_with(ctx, budget, Fault::None)
}

pub fn verify_theorems_with(ctx: &Context, budget: &OracleBudget, fault: Fault) -> Result<TheoremReport> {
    budget.admit(ctx)?;
    let config = MineConfig {
        mscr_strict: true,
        ..MineConfig::exact(budget.max_premise)
    };
    let mut rules = mine_mscr(ctx, &Measure::uniform(), &config)?;
    if fault == Fault::NegatedConclusions {
        let flipped: Vec<CausalRule> = rules
            .into_rules()
            .into_iter()
            .map(|r| CausalRule {
                conclusion: !r.conclusion,
                ..r
            })
            .collect();
        rules = RuleSet::new(ctx.n_literals(), flipped, config.mode, config.alpha, config.max_premise_len)?;
    }

    let mut report = TheoremReport::default();
    let atoms: Vec<usize> = (0..ctx.n_atoms()).collect();
    let seeds: Vec<LiteralSet> = literal_sets(&atoms, atoms.len())
        .into_iter()
        .map(|s| s.into_iter().collect())
        .collect();
    let extent_of = |l: &LiteralSet| -> BitSet {
        BitSet::from_indices(
            ctx.n_objects(),
            (0..ctx.n_objects()).filter(|&g| l.iter().all(|lit| ctx.satisfies(g, lit))),
        )
    };

    // probabilistic concepts: each reachable fixed point with the union of
    // the extents of every seed that closes to it
    let mut concepts: Vec<(LiteralSet, BitSet)> = Vec::new();
    for seed in &seeds {
        let fast = closure(&rules, seed).literals;
        let slow = naive_closure(&rules, seed);
        report.check(Property::ClosureReference, fast == slow, seed, || {
            format!("counter closure {fast:?}, iterated closure {slow:?}")
        });
        let ext = extent_of(seed);
        match concepts.iter_mut().find(|(t, _)| *t == slow) {
            Some((_, s)) => s.union_with(&ext),
            None => concepts.push((slow.clone(), ext.clone())),
        }
        if ext.is_empty() {
            continue;
        }
        report.check(Property::ClosureConsistent, slow.is_consistent(), seed, || {
            format!("closure {slow:?} holds a complementary pair")
        });
        let climbed = upsilon_fixpoint(&rules, seed, DEFAULT_EPSILON, None)?;
        report.check(Property::ClimbMatchesClosure, climbed == slow, seed, || {
            format!("climb ends at {climbed:?}, closure is {slow:?}")
        });
    }

    // classical concepts of the context scaled to signed literals
    let scaled = ctx.literal_scaled();
    let classical: Vec<(BitSet, LiteralSet)> = scaled
        .enumerate_formal_concepts(usize::MAX)?
        .into_iter()
        .map(|fc| (fc.extent, fc.intent.iter().map(Literal::from_code).collect()))
        .collect();

    for (extent, intent) in &classical {
        // the bottom concept of the scaled context has an inconsistent intent
        if extent.is_empty() {
            continue;
        }
        let ok = concepts
            .iter()
            .any(|(t, s)| extent.is_subset(s) && intent.is_subset(t));
        report.check(Property::ConceptEmbedding, ok, intent, || {
            format!("no probabilistic concept contains extent {extent:?}")
        });
    }
    for (t, s) in &concepts {
        let mut union = BitSet::new(ctx.n_objects());
        for (extent, intent) in &classical {
            if naive_closure(&rules, intent) == *t {
                union.union_with(extent);
            }
        }
        report.check(Property::ExtentDecomposition, union == *s, t, || {
            format!("extent {s:?}, union of classical extents {union:?}")
        });
    }
    Ok(report)
}

/// A context with `1..=max_objects` objects over `1..=max_atoms` boolean
/// attributes, each cell set with probability 1/2.
pub fn random_context<R: Rng>(rng: &mut R, budget: &OracleBudget) -> Context {
    let n_objects = rng.gen_range(1..=budget.max_objects);
    let n_atoms = rng.gen_range(1..=budget.max_atoms);
    let names: Vec<String> = (0..n_atoms).map(|a| format!("m{a}")).collect();
    let rows: Vec<(String, Vec<bool>)> = (0..n_objects)
        .map(|g| (format!("g{g}"), (0..n_atoms).map(|_| rng.gen_bool(0.5)).collect()))
        .collect();
    Context::from_boolean_rows(&names, &rows).expect("generated rows match the schema")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::ctx_a;

    const A: Literal = Literal::positive(0);
    const B: Literal = Literal::positive(1);
    const C: Literal = Literal::positive(2);

    fn set(lits: &[Literal]) -> LiteralSet {
        lits.iter().copied().collect()
    }

    fn has(rules: &[CausalRule], premise: &[Literal], c: Literal) -> bool {
        rules.iter().any(|r| r.conclusion == c && r.premise == set(premise))
    }

    #[test]
    fn causal_rules_on_ctx_a() {
        let rules = brute_force_causal_rules(&ctx_a(), &OracleBudget::default()).unwrap();
        assert!(has(&rules, &[A], B));
        assert!(has(&rules, &[B], C));
        assert!(has(&rules, &[C], B));
        assert!(has(&rules, &[!A, B], C));
        assert!(!has(&rules, &[A, B], C));
    }

    #[test]
    fn terminals_on_ctx_a() {
        let rules = brute_force_terminals(&ctx_a(), &OracleBudget::default()).unwrap();
        assert!(has(&rules, &[A], B));
        // refined by ¬a ∧ b → c, which reaches probability 1
        assert!(!has(&rules, &[B], C));
        assert!(has(&rules, &[!A, B], C));
    }

    #[test]
    fn constant_atom_gives_empty_premise_terminal() {
        let rows = vec![("x".to_string(), vec![true]), ("y".to_string(), vec![true])];
        let ctx = Context::from_boolean_rows(&["k"], &rows).unwrap();
        let rules = brute_force_terminals(&ctx, &OracleBudget::default()).unwrap();
        assert!(rules.iter().all(|r| r.premise.is_empty()));
        assert!(has(&rules, &[], Literal::positive(0)));
    }

    #[test]
    fn deterministic() {
        let ctx = ctx_a();
        let b = OracleBudget::default();
        assert_eq!(brute_force_causal_rules(&ctx, &b).unwrap(), brute_force_causal_rules(&ctx, &b).unwrap());
    }

    #[test]
    fn budget_guards() {
        let b = OracleBudget {
            max_objects: 9,
            ..OracleBudget::default()
        };
        assert!(matches!(b.validate(), Err(Error::Budget(_))));
        let b = OracleBudget {
            max_objects: 3,
            ..OracleBudget::default()
        };
        assert!(matches!(brute_force_causal_rules(&ctx_a(), &b), Err(Error::Budget(_))));
    }

    #[test]
    fn ctx_a_passes_every_property() {
        let report = verify_theorems(&ctx_a(), &OracleBudget::default()).unwrap();
        assert!(report.passed(), "{:#?}", report.failures);
        assert!(Property::ALL.iter().all(|&p| report.cases_of(p) > 0));
    }

    #[test]
    fn single_object_zero_probability_rules_conflict() {
        // ∅ → p (η = 1) and ∅ → ¬p (η = 0) are both terminal and both fire on ∅
        let rows = vec![("x".to_string(), vec![true, false])];
        let ctx = Context::from_boolean_rows(&["p", "q"], &rows).unwrap();
        let report = verify_theorems(&ctx, &OracleBudget::default()).unwrap();
        assert!(report.failures_of(Property::ClosureConsistent) > 0);
        assert_eq!(report.failures_of(Property::ConceptEmbedding), 0);
        assert_eq!(report.failures_of(Property::ExtentDecomposition), 0);
    }

    #[test]
    fn fault_is_detected() {
        let report = verify_theorems_with(&ctx_a(), &OracleBudget::default(), Fault::NegatedConclusions).unwrap();
        assert!(report.failures_of(Property::ClosureConsistent) > 0);
    }

    #[test]
    fn balanced_atom_closes_inconsistently() {
        // both c and ¬c hold with probability 1/2 and nothing refines them
        let rows = vec![("x".to_string(), vec![true]), ("y".to_string(), vec![false])];
        let ctx = Context::from_boolean_rows(&["c"], &rows).unwrap();
        let report = verify_theorems(&ctx, &OracleBudget::default()).unwrap();
        assert!(report.failures_of(Property::ClosureConsistent) > 0);
    }
}
