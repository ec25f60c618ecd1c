//! Prototype-and-copies data with optional cell noise: each class has one
//! prototype row over categorical attributes, replicated and shuffled.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::context::{build_context, Context, Literal, LiteralSet, Row, Schema};
use crate::error::{Error, Result};

/// Prototype draws allowed per class before giving up.
const PROTOTYPE_RETRIES: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub copies_per_class: usize,
    pub n_attributes: usize,
    pub values_per_attribute: usize,
    /// Defaults to `n_attributes / 2`.
    pub min_pairwise_hamming: Option<usize>,
    /// Fraction of cells replaced by a different value.
    pub noise_rate: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_classes: 12,
            copies_per_class: 30,
            n_attributes: 24,
            values_per_attribute: 8,
            min_pairwise_hamming: None,
            noise_rate: 0.0,
        }
    }
}

impl SyntheticSpec {
    pub fn min_hamming(&self) -> usize {
        self.min_pairwise_hamming.unwrap_or(self.n_attributes / 2)
    }

    pub fn n_objects(&self) -> usize {
        self.n_classes * self.copies_per_class
    }

    /// Cells flipped by noise: `noise_rate · objects · attributes`, rounded.
    pub fn noise_cells(&self) -> usize {
        (self.noise_rate * (self.n_objects() * self.n_attributes) as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.copies_per_class == 0 || self.n_attributes == 0 {
            return Err(Error::Generator("classes, copies and attributes must be positive".into()));
        }
        if self.values_per_attribute < 2 {
            return Err(Error::Generator("attributes need at least two values".into()));
        }
        if self.min_hamming() > self.n_attributes {
            return Err(Error::Generator(format!(
                "minimum distance {} exceeds the {} attributes",
                self.min_hamming(),
                self.n_attributes
            )));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(Error::Generator(format!("noise rate {} is outside [0, 1]", self.noise_rate)));
        }
        Ok(())
    }

    pub fn schema(&self) -> Schema {
        let values: Vec<String> = (0..self.values_per_attribute).map(|v| v.to_string()).collect();
        (0..self.n_attributes).fold(Schema::default(), |s, a| s.categorical(&attribute_name(a), &values))
    }
}

fn attribute_name(a: usize) -> String {
    format!("a{a:02}")
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub context: Context,
    /// Class of each object, in context order.
    pub labels: Vec<usize>,
    /// Value index per attribute, per class.
    pub prototypes: Vec<Vec<usize>>,
    /// `(object, attribute)` cells changed by noise.
    pub flipped: Vec<(usize, usize)>,
}

impl Synthetic {
    /// The positive literals describing a prototype.
    pub fn prototype_literals(&self, class: usize) -> LiteralSet {
        let ctx = &self.context;
        self.prototypes[class]
            .iter()
            .enumerate()
            .map(|(a, &v)| Literal::positive(ctx.groups()[a].atoms[v]))
            .collect()
    }
}

fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, k) = (spec.n_attributes, spec.values_per_attribute);

    let mut prototypes: Vec<Vec<usize>> = Vec::with_capacity(spec.n_classes);
    for class in 0..spec.n_classes {
        let mut found = None;
        for _ in 0..PROTOTYPE_RETRIES {
            let p: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
            if prototypes.iter().all(|q| hamming(&p, q) >= spec.min_hamming()) {
                found = Some(p);
                break;
            }
        }
        let p = found.ok_or_else(|| {
            Error::Generator(format!(
                "no prototype for class {class} at distance {} after {PROTOTYPE_RETRIES} draws",
                spec.min_hamming()
            ))
        })?;
        prototypes.push(p);
    }

    let mut labels: Vec<usize> = (0..spec.n_classes)
        .flat_map(|c| std::iter::repeat_n(c, spec.copies_per_class))
        .collect();
    labels.shuffle(&mut rng);
    let mut cells: Vec<Vec<usize>> = labels.iter().map(|&c| prototypes[c].clone()).collect();

    let mut flipped: Vec<(usize, usize)> = sample(&mut rng, cells.len() * m, spec.noise_cells())
        .into_iter()
        .map(|i| (i / m, i % m))
        .collect();
    flipped.sort_unstable();
    for &(g, a) in &flipped {
        let shift = rng.gen_range(1..k);
        cells[g][a] = (cells[g][a] + shift) % k;
    }

    let width = cells.len().to_string().len();
    let rows: Vec<Row> = cells
        .iter()
        .enumerate()
        .map(|(g, row)| {
            row.iter()
                .enumerate()
                .fold(Row::new(format!("o{:0width$}", g + 1)), |r, (a, v)| {
                    r.set(&attribute_name(a), &v.to_string())
                })
        })
        .collect();
    let context = build_context(&spec.schema(), &rows)?;
    Ok(Synthetic {
        context,
        labels,
        prototypes,
        flipped,
    })
}
