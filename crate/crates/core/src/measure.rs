//! Empirical measure over objects, rule probability, the one-sided Fisher
//! gate and the surprisal-style rule weight.

use std::cell::RefCell;
use std::cmp::Ordering;

use crate::bitset::BitSet;
use crate::context::{Context, Literal, LiteralSet};
use crate::error::{Error, Result};

/// Default `ε` in the rule weight `−ln(1 + ε − η)`.
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Probability measure on objects. Internally masses are kept unnormalised:
/// under the uniform measure every object has mass 1, so conditional
/// probabilities are exact ratios of integer counts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Measure {
    weights: Option<Vec<f64>>,
}

impl Measure {
    pub fn uniform() -> Self {
        Measure { weights: None }
    }

    /// Per-object weights, normalised to sum to one. Every weight must be
    /// strictly positive.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if let Some((g, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMeasure(format!("object {g} has weight {w}; weights must be > 0")));
        }
        let total: f64 = weights.iter().sum();
        let normalised: Vec<f64> = weights.iter().map(|w| w / total).collect();
        if normalised.windows(2).all(|w| w[0] == w[1]) {
            return Ok(Measure::uniform());
        }
        Ok(Measure {
            weights: Some(normalised),
        })
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.is_none()
    }

    pub fn check(&self, ctx: &Context) -> Result<()> {
        match &self.weights {
            Some(w) if w.len() != ctx.n_objects() => Err(Error::InvalidMeasure(format!(
                "{} weights for {} objects",
                w.len(),
                ctx.n_objects()
            ))),
            _ => Ok(()),
        }
    }

    /// Normalised weight of object `g` in a context of `n` objects.
    pub fn weight(&self, g: usize, n: usize) -> f64 {
        match &self.weights {
            None => 1.0 / n as f64,
            Some(w) => w[g],
        }
    }

    /// Unnormalised mass of an object set.
    pub fn mass(&self, extent: &BitSet) -> f64 {
        match &self.weights {
            None => extent.count() as f64,
            Some(w) => extent.iter().map(|g| w[g]).sum(),
        }
    }

    pub fn total(&self, ctx: &Context) -> f64 {
        match &self.weights {
            None => ctx.n_objects() as f64,
            Some(_) => 1.0,
        }
    }
}

/// `ν(∧L)`: measure of the objects satisfying every literal of `literals`.
pub fn nu(ctx: &Context, measure: &Measure, literals: &LiteralSet) -> f64 {
    if !literals.is_consistent() {
        log::warn!("nu called on an inconsistent literal set {literals:?}");
        return 0.0;
    }
    let total = measure.total(ctx);
    if total == 0.0 {
        return if literals.is_empty() { 1.0 } else { 0.0 };
    }
    measure.mass(&ctx.extent(literals.as_slice())) / total
}

/// A conditional probability kept as numerator and denominator so that
/// comparisons can be made by cross-multiplication. Under the uniform
/// measure both are integer counts and comparisons are exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conditional {
    pub both: f64,
    pub premise: f64,
}

impl Conditional {
    pub fn of(ctx: &Context, measure: &Measure, premise: &[Literal], conclusion: Literal) -> Conditional {
        let ext = ctx.extent(premise);
        let both = ext.and(ctx.literal_extent(conclusion));
        Conditional {
            both: measure.mass(&both),
            premise: measure.mass(&ext),
        }
    }

    pub fn is_defined(&self) -> bool {
        self.premise > 0.0
    }

    pub fn value(&self) -> Option<f64> {
        self.is_defined().then(|| self.both / self.premise)
    }

    /// Order on defined values.
    pub fn compare(&self, other: &Conditional) -> Ordering {
        debug_assert!(self.is_defined() && other.is_defined());
        (self.both * other.premise)
            .partial_cmp(&(other.both * self.premise))
            .expect("finite masses")
    }

    pub fn is_one(&self) -> bool {
        self.is_defined() && self.both == self.premise
    }

    pub fn is_zero(&self) -> bool {
        self.is_defined() && self.both == 0.0
    }
}

/// `η(P → C) = ν(P ∧ C) / ν(P)`; `None` when `ν(P) = 0`.
pub fn eta(ctx: &Context, measure: &Measure, premise: &LiteralSet, conclusion: Literal) -> Option<f64> {
    Conditional::of(ctx, measure, premise.as_slice(), conclusion).value()
}

/// Object counts for testing whether a literal `H` and a conclusion `C` are
/// associated: rows are `H` true / false, columns `C` true / false.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContingencyTable2x2 {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl ContingencyTable2x2 {
    pub fn new(n11: u64, n10: u64, n01: u64, n00: u64) -> Self {
        ContingencyTable2x2 { n11, n10, n01, n00 }
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }
}

thread_local! {
    static LN_FACTORIAL: RefCell<Vec<f64>> = RefCell::new(vec![0.0, 0.0]);
}

fn ln_factorial(n: u64) -> f64 {
    LN_FACTORIAL.with(|table| {
        let mut table = table.borrow_mut();
        let n = n as usize;
        while table.len() <= n {
            let k = table.len();
            let prev = table[k - 1];
            table.push(prev + (k as f64).ln());
        }
        table[n]
    })
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// One-sided Fisher exact test in the enrichment direction:
/// `P(X ≥ n11)` for `X` hypergeometric with the table's margins fixed.
///
/// The tail is summed relative to its largest term, so the result stays
/// accurate for p-values far below `1e-300`; values below the smallest
/// normal `f64` are clamped to it so the result is always in `(0, 1]`.
pub fn fisher_one_sided(t: &ContingencyTable2x2) -> Result<f64> {
    let n = t.total();
    if n == 0 {
        return Err(Error::EmptyTable);
    }
    let row = t.n11 + t.n10;
    let col = t.n11 + t.n01;
    let hi = row.min(col);
    let x0 = t.n11;
    let ln_pmf = |x: u64| ln_choose(col, x) + ln_choose(n - col, row - x) - ln_choose(n, row);
    // pmf(x + 1) / pmf(x)
    let ratio = |x: u64| {
        ((col - x) as f64 * (row - x) as f64) / ((x + 1) as f64 * (n + x + 1 - col - row) as f64)
    };
    let mode = ((row + 1) as f64 * (col + 1) as f64 / (n + 2) as f64).floor() as u64;
    let anchor = mode.clamp(x0, hi);

    let mut sum = 1.0;
    let mut term = 1.0;
    let mut x = anchor;
    while x < hi {
        term *= ratio(x);
        x += 1;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    let mut term = 1.0;
    let mut x = anchor;
    while x > x0 {
        term /= ratio(x - 1);
        x -= 1;
        sum += term;
    }
    let ln_p = ln_pmf(anchor) + sum.ln();
    Ok(ln_p.exp().clamp(f64::MIN_POSITIVE, 1.0))
}

/// Rule weight `γ = −ln(1 + ε − η)`.
pub fn gamma(eta: Option<f64>, epsilon: f64) -> Result<f64> {
    eta.map(|e| gamma_value(e, epsilon)).ok_or(Error::UndefinedEta)
}

#[inline]
pub fn gamma_value(eta: f64, epsilon: f64) -> f64 {
    -(1.0 + epsilon - eta).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::ctx_a;

    fn set(lits: &[Literal]) -> LiteralSet {
        lits.iter().copied().collect()
    }

    #[test]
    fn nu_on_ctx_a() {
        let ctx = ctx_a();
        let m = Measure::uniform();
        assert_eq!(nu(&ctx, &m, &set(&[Literal::positive(0)])), 0.5);
        assert_eq!(nu(&ctx, &m, &LiteralSet::new()), 1.0);
        assert_eq!(nu(&ctx, &m, &set(&[Literal::positive(0), Literal::negative(0)])), 0.0);
    }

    #[test]
    fn eta_on_ctx_a() {
        let ctx = ctx_a();
        let m = Measure::uniform();
        let (a, b, c) = (Literal::positive(0), Literal::positive(1), Literal::positive(2));
        assert_eq!(eta(&ctx, &m, &set(&[a]), b), Some(1.0));
        assert_eq!(eta(&ctx, &m, &set(&[b]), c), Some(2.0 / 3.0));
        assert_eq!(eta(&ctx, &m, &LiteralSet::new(), c), Some(0.5));
        assert_eq!(eta(&ctx, &m, &set(&[a, !b]), c), None);
    }

    #[test]
    fn weighted_measure() {
        let ctx = ctx_a();
        let m = Measure::from_weights(vec![1.0, 1.0, 1.0, 5.0]).unwrap();
        assert!(!m.is_uniform());
        assert!((nu(&ctx, &m, &set(&[Literal::positive(0)])) - 0.25).abs() < 1e-12);
        assert!(Measure::from_weights(vec![2.0; 4]).unwrap().is_uniform());
        assert!(Measure::from_weights(vec![1.0, 0.0]).is_err());
        assert!(Measure::from_weights(vec![1.0, 2.0]).unwrap().check(&ctx).is_err());
    }

    #[test]
    fn fisher_examples() {
        let p = fisher_one_sided(&ContingencyTable2x2::new(2, 0, 1, 1)).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        // fully separated: 1 / C(k + m, k)
        let p = fisher_one_sided(&ContingencyTable2x2::new(3, 0, 0, 4)).unwrap();
        assert!((p - 1.0 / 35.0).abs() < 1e-15);
        let p = fisher_one_sided(&ContingencyTable2x2::new(0, 0, 5, 2)).unwrap();
        assert_eq!(p, 1.0);
        assert!(matches!(
            fisher_one_sided(&ContingencyTable2x2::new(0, 0, 0, 0)),
            Err(Error::EmptyTable)
        ));
    }

    #[test]
    fn fisher_tiny_tail_does_not_vanish() {
        // 1 / C(2000, 1000) is far below 1e-300
        let p = fisher_one_sided(&ContingencyTable2x2::new(1000, 0, 0, 1000)).unwrap();
        assert!(p > 0.0 && p <= f64::MIN_POSITIVE);
        let p = fisher_one_sided(&ContingencyTable2x2::new(300, 0, 0, 300)).unwrap();
        let expected = -ln_choose(600, 300);
        assert!((p.ln() - expected).abs() < 1e-9);
    }

    #[test]
    fn gamma_examples() {
        let eps = 1e-4;
        assert!((gamma(Some(1.0), eps).unwrap() - 9.210340371976182).abs() < 1e-12);
        assert_eq!(gamma(Some(eps), eps).unwrap(), 0.0);
        let g = gamma(Some(0.0), eps).unwrap();
        assert!(g < 0.0 && (g + 1.0e-4).abs() < 1e-8);
        assert!(matches!(gamma(None, eps), Err(Error::UndefinedEta)));
    }
}
