//! Forward chaining over a rule system, the consistency score `Int`, and
//! the one-literal hill climb `Υ` whose fixed points act as prototypes.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use crate::bitset::BitSet;
use crate::context::{Context, Literal, LiteralSet};
use crate::error::{Error, Result};
use crate::measure::gamma_value;
use crate::rules::RuleSet;

/// Δ values within this distance of each other (or of zero) are equal.
pub const DELTA_TOLERANCE: f64 = 1e-9;

/// `Π(L)`: `L` plus the conclusion of every rule whose premise is in `L`.
pub fn predict_step(rules: &RuleSet, literals: &LiteralSet) -> LiteralSet {
    let mut out = literals.clone();
    for id in rules.fired_by(literals) {
        out.insert(rules.get(id).conclusion);
    }
    out
}

/// Least fixed point of [`predict_step`] containing the seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    pub literals: LiteralSet,
    /// `false` when the fixed point holds a literal and its negation.
    pub consistent: bool,
}

/// Forward chaining with per-rule counters of unsatisfied premise literals.
pub fn closure(rules: &RuleSet, seed: &LiteralSet) -> Closure {
    let n = rules.n_literals();
    let mut have = BitSet::new(n);
    let mut missing: Vec<usize> = rules.iter().map(|r| r.premise.len()).collect();
    let mut queue: VecDeque<Literal> = VecDeque::new();
    let fire = |id: usize, have: &mut BitSet, queue: &mut VecDeque<Literal>| {
        let c = rules.get(id).conclusion;
        if !have.contains(c.code()) {
            have.insert(c.code());
            queue.push_back(c);
        }
    };
    for l in seed.iter() {
        if !have.contains(l.code()) {
            have.insert(l.code());
            queue.push_back(l);
        }
    }
    for (id, r) in rules.iter().enumerate() {
        if r.premise.is_empty() {
            fire(id, &mut have, &mut queue);
        }
    }
    while let Some(l) = queue.pop_front() {
        for &id in rules.with_premise_literal(l) {
            missing[id] -= 1;
            if missing[id] == 0 {
                fire(id, &mut have, &mut queue);
            }
        }
    }
    let literals: LiteralSet = have.iter().map(Literal::from_code).collect();
    let consistent = literals.is_consistent();
    Closure { literals, consistent }
}

/// Rules confirmed and refuted by a literal set, with its `Int` score.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionState {
    pub literals: LiteralSet,
    pub sat_rules: Vec<usize>,
    pub fal_rules: Vec<usize>,
    pub int_value: f64,
}

/// `Int(L) = Σ_Sat γ − Σ_Fal γ`, evaluated from scratch.
pub fn int_criterion(rules: &RuleSet, literals: &LiteralSet, epsilon: f64) -> PredictionState {
    let bits = literals.to_bits(rules.n_literals());
    let mut sat = Vec::new();
    let mut fal = Vec::new();
    let mut int_value = 0.0;
    for (id, r) in rules.iter().enumerate() {
        if !r.premise.iter().all(|l| bits.contains(l.code())) {
            continue;
        }
        if bits.contains(r.conclusion.code()) {
            sat.push(id);
            int_value += gamma_value(r.eta, epsilon);
        } else if bits.contains((!r.conclusion).code()) {
            fal.push(id);
            int_value -= gamma_value(r.eta, epsilon);
        }
    }
    PredictionState {
        literals: literals.clone(),
        sat_rules: sat,
        fal_rules: fal,
        int_value,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Added(Literal),
    Removed(Literal),
    Fixpoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub action: Action,
    pub literals: LiteralSet,
    /// `Int` change predicted for the step; zero at a fixed point.
    pub delta: f64,
}

/// Incremental `Int` evaluation: the change from toggling one literal only
/// involves rules mentioning it in the premise or conclusion.
pub struct Upsilon<'a> {
    rules: &'a RuleSet,
    gamma: Vec<f64>,
}

impl<'a> Upsilon<'a> {
    pub fn new(rules: &'a RuleSet, epsilon: f64) -> Self {
        let gamma = rules.iter().map(|r| gamma_value(r.eta, epsilon)).collect();
        Upsilon { rules, gamma }
    }

    fn contribution(&self, id: usize, bits: &BitSet) -> f64 {
        let r = self.rules.get(id);
        if !r.premise.iter().all(|l| bits.contains(l.code())) {
            return 0.0;
        }
        if bits.contains(r.conclusion.code()) {
            self.gamma[id]
        } else if bits.contains((!r.conclusion).code()) {
            -self.gamma[id]
        } else {
            0.0
        }
    }

    fn affected(&self, g: Literal) -> impl Iterator<Item = usize> + '_ {
        self.rules
            .with_premise_literal(g)
            .iter()
            .chain(self.rules.with_conclusion(g))
            .chain(self.rules.with_conclusion(!g))
            .copied()
    }

    /// `Int(L ∪ {g}) − Int(L)` for `g ∉ L`, or `Int(L ∖ {g}) − Int(L)` for `g ∈ L`.
    fn toggle_delta(&self, bits: &mut BitSet, g: Literal) -> f64 {
        let before: f64 = self.affected(g).map(|id| self.contribution(id, bits)).sum();
        let present = bits.contains(g.code());
        if present {
            bits.remove(g.code());
        } else {
            bits.insert(g.code());
        }
        let after: f64 = self.affected(g).map(|id| self.contribution(id, bits)).sum();
        if present {
            bits.insert(g.code());
        } else {
            bits.remove(g.code());
        }
        after - before
    }

    fn predicted(&self, bits: &BitSet, g: Literal) -> bool {
        self.rules
            .with_conclusion(g)
            .iter()
            .any(|&id| self.rules.get(id).premise.iter().all(|l| bits.contains(l.code())))
    }

    /// One application of `Υ`.
    pub fn step(&self, literals: &LiteralSet) -> Step {
        let mut bits = literals.to_bits(self.rules.n_literals());
        let mut best_add: Option<(f64, Literal)> = None;
        for code in 0..self.rules.n_literals() {
            let g = Literal::from_code(code);
            if bits.contains(code) || bits.contains((!g).code()) || !self.predicted(&bits, g) {
                continue;
            }
            let d = self.toggle_delta(&mut bits, g);
            if best_add.is_none_or(|(b, _)| d > b + DELTA_TOLERANCE) {
                best_add = Some((d, g));
            }
        }
        let mut best_remove: Option<(f64, Literal)> = None;
        for g in literals.iter() {
            let d = self.toggle_delta(&mut bits, g);
            if best_remove.is_none_or(|(b, _)| d > b + DELTA_TOLERANCE) {
                best_remove = Some((d, g));
            }
        }
        let plus = best_add.map_or(f64::NEG_INFINITY, |(d, _)| d);
        let minus = best_remove.map_or(f64::NEG_INFINITY, |(d, _)| d);
        if let Some((d, g)) = best_add {
            if d > DELTA_TOLERANCE && d > minus + DELTA_TOLERANCE {
                return Step {
                    action: Action::Added(g),
                    literals: literals.with(g),
                    delta: d,
                };
            }
        }
        if let Some((d, g)) = best_remove {
            // ties between the best addition and the best removal remove
            if d > DELTA_TOLERANCE && d >= plus - DELTA_TOLERANCE {
                return Step {
                    action: Action::Removed(g),
                    literals: literals.without(g),
                    delta: d,
                };
            }
        }
        Step {
            action: Action::Fixpoint,
            literals: literals.clone(),
            delta: 0.0,
        }
    }

    /// Iterates [`Upsilon::step`] to a fixed point, returning every step
    /// including the final one.
    pub fn run(&self, seed: &LiteralSet, max_steps: usize) -> Result<Vec<Step>> {
        let mut trace = Vec::new();
        let mut current = seed.clone();
        for _ in 0..=max_steps {
            let step = self.step(&current);
            let done = step.action == Action::Fixpoint;
            current = step.literals.clone();
            trace.push(step);
            if done {
                return Ok(trace);
            }
        }
        Err(Error::StepLimit(max_steps))
    }
}

/// Default safety valve for [`upsilon_fixpoint`].
pub fn default_max_steps(rules: &RuleSet) -> usize {
    10 * rules.n_literals().max(1)
}

pub fn upsilon_step(rules: &RuleSet, literals: &LiteralSet, epsilon: f64) -> Step {
    Upsilon::new(rules, epsilon).step(literals)
}

/// `Υ∞(L)`.
pub fn upsilon_fixpoint(rules: &RuleSet, seed: &LiteralSet, epsilon: f64, max_steps: Option<usize>) -> Result<LiteralSet> {
    let max_steps = max_steps.unwrap_or_else(|| default_max_steps(rules));
    let trace = Upsilon::new(rules, epsilon).run(seed, max_steps)?;
    Ok(trace.last().expect("trace ends with a fixed point").literals.clone())
}

/// Recomputes `Int` from scratch along a trace and fails on the first
/// non-fixpoint step that does not strictly increase it.
pub fn check_trace(rules: &RuleSet, seed: &LiteralSet, trace: &[Step], epsilon: f64) -> Result<()> {
    let mut before = int_criterion(rules, seed, epsilon).int_value;
    for (i, step) in trace.iter().enumerate() {
        if step.action == Action::Fixpoint {
            break;
        }
        let after = int_criterion(rules, &step.literals, epsilon).int_value;
        if after <= before {
            return Err(Error::NonIncreasingStep { step: i, before, after });
        }
        before = after;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Operator {
    /// The consistency climb `Υ∞`.
    #[default]
    Upsilon,
    /// The prediction closure `Π∞`.
    Closure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterOptions {
    pub epsilon: f64,
    pub operator: Operator,
    pub max_steps: Option<usize>,
    /// Recompute `Int` from scratch after every climb step.
    pub check_steps: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            epsilon: crate::measure::DEFAULT_EPSILON,
            operator: Operator::Upsilon,
            max_steps: None,
            check_steps: false,
        }
    }
}

/// A fixed point together with the objects whose descriptions reach it.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointConcept {
    pub intent: LiteralSet,
    /// Union of the derivations of the seed objects' descriptions.
    pub extent: BitSet,
    pub int_value: f64,
    /// Seed objects, ascending.
    pub seeds: Vec<usize>,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterReport {
    pub concepts: Vec<FixedPointConcept>,
    /// Non-fixpoint climb steps taken across all seeds.
    pub steps: usize,
}

/// Fixed points reached from every object description, ordered by seed
/// count (descending), then intent.
pub fn cluster(ctx: &Context, rules: &RuleSet, epsilon: f64) -> Result<Vec<FixedPointConcept>> {
    let options = ClusterOptions {
        epsilon,
        ..ClusterOptions::default()
    };
    Ok(cluster_with(ctx, rules, &options)?.concepts)
}

pub fn cluster_with(ctx: &Context, rules: &RuleSet, options: &ClusterOptions) -> Result<ClusterReport> {
    if rules.n_literals() != ctx.n_literals() {
        return Err(Error::InvalidRule(format!(
            "rules cover {} literals, context has {}",
            rules.n_literals(),
            ctx.n_literals()
        )));
    }
    let upsilon = Upsilon::new(rules, options.epsilon);
    let max_steps = options.max_steps.unwrap_or_else(|| default_max_steps(rules));
    let results: Vec<(LiteralSet, bool, usize)> = (0..ctx.n_objects())
        .into_par_iter()
        .map(|g| {
            let seed = ctx.object_intent(g)?;
            match options.operator {
                Operator::Closure => {
                    let c = closure(rules, &seed);
                    Ok((c.literals, c.consistent, 0))
                }
                Operator::Upsilon => {
                    let trace = upsilon.run(&seed, max_steps)?;
                    if options.check_steps {
                        check_trace(rules, &seed, &trace, options.epsilon)?;
                    }
                    let last = trace.last().expect("trace ends with a fixed point").literals.clone();
                    let consistent = last.is_consistent();
                    Ok((last, consistent, trace.len() - 1))
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut groups: BTreeMap<LiteralSet, (Vec<usize>, bool)> = BTreeMap::new();
    let mut steps = 0;
    for (g, (intent, consistent, n)) in results.into_iter().enumerate() {
        steps += n;
        groups.entry(intent).or_insert_with(|| (Vec::new(), consistent)).0.push(g);
    }
    let mut concepts: Vec<FixedPointConcept> = groups
        .into_iter()
        .map(|(intent, (seeds, consistent))| {
            let mut extent = BitSet::new(ctx.n_objects());
            for &g in &seeds {
                let description = ctx.object_intent(g).expect("seed in range");
                extent.union_with(&ctx.derive_down_literals(&description));
            }
            let int_value = int_criterion(rules, &intent, options.epsilon).int_value;
            FixedPointConcept {
                intent,
                extent,
                int_value,
                seeds,
                consistent,
            }
        })
        .collect();
    concepts.sort_by(|a, b| b.seeds.len().cmp(&a.seeds.len()).then_with(|| a.intent.cmp(&b.intent)));
    Ok(ClusterReport { concepts, steps })
}

/// Index of the concept a new description belongs to: the concept whose
/// intent equals the description's fixed point, otherwise the one whose
/// intent shares the highest `Int` with it (lowest index on ties).
pub fn assign(rules: &RuleSet, concepts: &[FixedPointConcept], description: &LiteralSet, epsilon: f64) -> Result<Option<usize>> {
    if concepts.is_empty() {
        return Ok(None);
    }
    let fixed = upsilon_fixpoint(rules, description, epsilon, None)?;
    if let Some(i) = concepts.iter().position(|c| c.intent == fixed) {
        return Ok(Some(i));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, c) in concepts.iter().enumerate() {
        let shared = fixed.intersection(&c.intent);
        let score = int_criterion(rules, &shared, epsilon).int_value;
        if score > best.0 + DELTA_TOLERANCE {
            best = (score, i);
        }
    }
    Ok(Some(best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;
    use crate::miner::{mine_mscr, MineConfig};
    use crate::rules::{CausalRule, Mode};
    use crate::testutil::ctx_a;

    const A: Literal = Literal::positive(0);
    const B: Literal = Literal::positive(1);
    const C: Literal = Literal::positive(2);
    const EPS: f64 = 1e-4;

    fn set(lits: &[Literal]) -> LiteralSet {
        lits.iter().copied().collect()
    }

    fn rule(premise: &[Literal], conclusion: Literal, eta: f64) -> CausalRule {
        CausalRule {
            premise: set(premise),
            conclusion,
            n_premise: 1,
            n_both: 1,
            eta,
            p_value: None,
            chain_len: premise.len(),
        }
    }

    fn rules(rs: Vec<CausalRule>) -> RuleSet {
        RuleSet::new(6, rs, Mode::Exact, 0.0, 3).unwrap()
    }

    #[test]
    fn single_prediction_steps() {
        let r = rules(vec![rule(&[A], B, 1.0)]);
        assert_eq!(predict_step(&r, &set(&[A])), set(&[A, B]));
        assert_eq!(predict_step(&r, &set(&[C])), set(&[C]));
        let r = rules(vec![rule(&[A], B, 1.0), rule(&[B], C, 1.0)]);
        assert_eq!(predict_step(&r, &set(&[A])), set(&[A, B]));
    }

    #[test]
    fn closure_chains() {
        let r = rules(vec![rule(&[A], B, 1.0), rule(&[B], C, 1.0)]);
        let c = closure(&r, &set(&[A]));
        assert_eq!(c.literals, set(&[A, B, C]));
        assert!(c.consistent);
        assert_eq!(closure(&RuleSet::empty(6), &set(&[!A, C])).literals, set(&[!A, C]));
    }

    #[test]
    fn closure_flags_conflicts() {
        let r = rules(vec![rule(&[A], B, 1.0), rule(&[A], !B, 0.6)]);
        let c = closure(&r, &set(&[A]));
        assert!(!c.consistent);
        assert_eq!(c.literals, set(&[A, B, !B]));
    }

    #[test]
    fn closure_on_ctx_a_intent() {
        let ctx = ctx_a();
        let rs = mine_mscr(&ctx, &Measure::uniform(), &MineConfig::exact(3)).unwrap();
        let seed = ctx.object_intent(0).unwrap();
        let c = closure(&rs, &seed);
        assert!(c.consistent);
        assert!(seed.is_subset(&c.literals));
    }

    #[test]
    fn int_examples() {
        let r = rules(vec![rule(&[A], B, 1.0)]);
        let s = int_criterion(&r, &set(&[A, B]), EPS);
        assert!((s.int_value - 9.210340371976182).abs() < 1e-12);
        assert_eq!((s.sat_rules, s.fal_rules), (vec![0], vec![]));
        let s = int_criterion(&r, &set(&[A, !B]), EPS);
        assert!((s.int_value + 9.210340371976182).abs() < 1e-12);
        assert_eq!(s.fal_rules, vec![0]);
        assert_eq!(int_criterion(&r, &LiteralSet::new(), EPS).int_value, 0.0);
    }

    #[test]
    fn upsilon_examples() {
        let r = rules(vec![rule(&[A], B, 1.0)]);
        let s = upsilon_step(&r, &set(&[A]), EPS);
        assert_eq!(s.action, Action::Added(B));
        let s = upsilon_step(&r, &set(&[A, B]), EPS);
        assert_eq!(s.action, Action::Fixpoint);
        let r = rules(vec![rule(&[A], B, 1.0), rule(&[B], C, 1.0)]);
        assert_eq!(upsilon_fixpoint(&r, &set(&[A]), EPS, None).unwrap(), set(&[A, B, C]));
        assert_eq!(upsilon_fixpoint(&RuleSet::empty(6), &set(&[A]), EPS, None).unwrap(), set(&[A]));
    }

    #[test]
    fn upsilon_resolves_conflict_by_removal() {
        let r = rules(vec![rule(&[A], B, 1.0), rule(&[C], !B, 1.0)]);
        let seed = set(&[A, B, C]);
        let before = int_criterion(&r, &seed, EPS).int_value;
        let s = upsilon_step(&r, &seed, EPS);
        assert!(matches!(s.action, Action::Removed(_)));
        assert!(int_criterion(&r, &s.literals, EPS).int_value > before);
        // the single best one-literal edit, by brute force
        let best = seed
            .iter()
            .map(|g| int_criterion(&r, &seed.without(g), EPS).int_value)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((int_criterion(&r, &s.literals, EPS).int_value - best).abs() < 1e-12);
    }

    #[test]
    fn incremental_delta_matches_recomputation() {
        let r = rules(vec![
            rule(&[A], B, 0.9),
            rule(&[B], C, 0.7),
            rule(&[A, B], !C, 0.6),
            rule(&[], A, 0.5),
        ]);
        let u = Upsilon::new(&r, EPS);
        let l = set(&[A, B]);
        let mut bits = l.to_bits(6);
        for code in 0..6 {
            let g = Literal::from_code(code);
            let toggled = if l.contains(g) { l.without(g) } else { l.with(g) };
            let expected = int_criterion(&r, &toggled, EPS).int_value - int_criterion(&r, &l, EPS).int_value;
            assert!((u.toggle_delta(&mut bits, g) - expected).abs() < 1e-12);
        }
        assert_eq!(bits, l.to_bits(6));
    }

    #[test]
    fn one_class_context_has_one_fixed_point() {
        let rows: Vec<(String, Vec<bool>)> = (0..5).map(|i| (format!("o{i}"), vec![true, false, true])).collect();
        let ctx = Context::from_boolean_rows(&["x", "y", "z"], &rows).unwrap();
        let rs = mine_mscr(&ctx, &Measure::uniform(), &MineConfig::exact(3)).unwrap();
        let concepts = cluster(&ctx, &rs, EPS).unwrap();
        assert_eq!(concepts.len(), 1);
        assert_eq!(concepts[0].extent, ctx.all_objects());
        assert_eq!(concepts[0].seeds, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn no_rules_keeps_descriptions() {
        let ctx = ctx_a();
        let concepts = cluster(&ctx, &RuleSet::empty(ctx.n_literals()), EPS).unwrap();
        assert_eq!(concepts.len(), 4);
        for c in &concepts {
            assert_eq!(c.seeds.len(), 1);
            assert_eq!(c.intent, ctx.object_intent(c.seeds[0]).unwrap());
        }
    }

    #[test]
    fn assign_prefers_exact_fixed_point() {
        let ctx = ctx_a();
        let rs = mine_mscr(&ctx, &Measure::uniform(), &MineConfig::exact(3)).unwrap();
        let concepts = cluster(&ctx, &rs, EPS).unwrap();
        for g in 0..ctx.n_objects() {
            let i = assign(&rs, &concepts, &ctx.object_intent(g).unwrap(), EPS).unwrap().unwrap();
            assert!(concepts[i].seeds.contains(&g));
        }
    }
}
