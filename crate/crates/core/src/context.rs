//! Formal contexts over categorical data.
//!
//! Each source attribute is turned into atoms: boolean attributes become a
//! single atom (or a one-hot pair, depending on [`BooleanEncoding`]) and
//! categorical attributes become one atom per domain value. Incidence is
//! kept twice, as per-object rows for reading intents and as per-atom
//! columns for counting supports with AND/popcount.

use std::collections::HashMap;
use std::fmt;
use std::ops::Not;

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Largest atom universe accepted by [`Context::enumerate_formal_concepts`].
pub const CONCEPT_ENUMERATION_ATOM_LIMIT: usize = 20;

/// A signed atom. Encoded as `2 * atom + sign`, so the natural order is by
/// atom id first, positive before negative.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(u32);

impl Literal {
    pub const fn positive(atom: usize) -> Self {
        Literal((atom as u32) << 1)
    }

    pub const fn negative(atom: usize) -> Self {
        Literal((atom as u32) << 1 | 1)
    }

    pub fn new(atom: usize, positive: bool) -> Self {
        if positive {
            Literal::positive(atom)
        } else {
            Literal::negative(atom)
        }
    }

    pub fn from_code(code: usize) -> Self {
        Literal(code as u32)
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn atom(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }
}

impl Not for Literal {
    type Output = Literal;

    fn not(self) -> Literal {
        Literal(self.0 ^ 1)
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_positive() {
            write!(f, "+{}", self.atom())
        } else {
            write!(f, "-{}", self.atom())
        }
    }
}

/// A canonically ordered, duplicate-free set of literals.
///
/// Consistency (no complementary pair) is not enforced on construction since
/// closures under conflicting rules may legitimately produce one; callers
/// check [`LiteralSet::is_consistent`].
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LiteralSet(Vec<Literal>);

impl LiteralSet {
    pub fn new() -> Self {
        LiteralSet(Vec::new())
    }

    pub fn as_slice(&self) -> &[Literal] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Literal> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, lit: Literal) -> bool {
        self.0.binary_search(&lit).is_ok()
    }

    pub fn insert(&mut self, lit: Literal) -> bool {
        match self.0.binary_search(&lit) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, lit);
                true
            }
        }
    }

    pub fn remove(&mut self, lit: Literal) -> bool {
        match self.0.binary_search(&lit) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn with(&self, lit: Literal) -> LiteralSet {
        let mut out = self.clone();
        out.insert(lit);
        out
    }

    pub fn without(&self, lit: Literal) -> LiteralSet {
        let mut out = self.clone();
        out.remove(lit);
        out
    }

    /// Never contains both an atom and its negation.
    pub fn is_consistent(&self) -> bool {
        // complementary literals are adjacent in canonical order
        self.0.windows(2).all(|w| w[0].atom() != w[1].atom())
    }

    pub fn is_subset(&self, other: &LiteralSet) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut it = other.0.iter();
        'outer: for lit in &self.0 {
            for o in it.by_ref() {
                if o == lit {
                    continue 'outer;
                }
                if o > lit {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn union(&self, other: &LiteralSet) -> LiteralSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn intersection(&self, other: &LiteralSet) -> LiteralSet {
        self.iter().filter(|l| other.contains(*l)).collect()
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.iter().filter(|l| l.is_positive()).map(Literal::atom)
    }

    /// Membership bitmap indexed by literal code.
    pub fn to_bits(&self, n_literals: usize) -> BitSet {
        BitSet::from_indices(n_literals, self.iter().map(Literal::code))
    }
}

impl FromIterator<Literal> for LiteralSet {
    fn from_iter<I: IntoIterator<Item = Literal>>(iter: I) -> Self {
        let mut v: Vec<Literal> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        LiteralSet(v)
    }
}

impl fmt::Debug for LiteralSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// How boolean attributes map onto atoms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BooleanEncoding {
    /// One atom per boolean attribute; false is its negative literal.
    #[default]
    Atom,
    /// Two atoms, `attr=0` and `attr=1`.
    OneHot,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttributeKind {
    Boolean,
    Categorical(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

/// Declared attributes in column order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    pub attributes: Vec<AttributeSpec>,
    pub boolean_encoding: BooleanEncoding,
    /// Optional CSV column carrying per-object weights.
    pub weight_column: Option<String>,
}

impl Schema {
    pub fn new(boolean_encoding: BooleanEncoding) -> Self {
        Schema {
            attributes: Vec::new(),
            boolean_encoding,
            weight_column: None,
        }
    }

    pub fn boolean(mut self, name: &str) -> Self {
        self.attributes.push(AttributeSpec {
            name: name.to_string(),
            kind: AttributeKind::Boolean,
        });
        self
    }

    pub fn categorical<S: AsRef<str>>(mut self, name: &str, values: &[S]) -> Self {
        self.attributes.push(AttributeSpec {
            name: name.to_string(),
            kind: AttributeKind::Categorical(
                values.iter().map(|v| v.as_ref().to_string()).collect(),
            ),
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for attr in &self.attributes {
            if attr.name.is_empty() {
                return Err(Error::Schema("empty attribute name".into()));
            }
            if seen.insert(attr.name.as_str(), ()).is_some() {
                return Err(Error::Schema(format!("duplicate attribute {:?}", attr.name)));
            }
            if let AttributeKind::Categorical(values) = &attr.kind {
                if values.is_empty() {
                    return Err(Error::Schema(format!("attribute {:?} has an empty domain", attr.name)));
                }
                let mut vs = HashMap::new();
                for v in values {
                    if vs.insert(v.as_str(), ()).is_some() {
                        return Err(Error::Schema(format!(
                            "attribute {:?} lists value {v:?} twice",
                            attr.name
                        )));
                    }
                }
            }
        }
        if let Some(w) = &self.weight_column {
            if seen.contains_key(w.as_str()) {
                return Err(Error::Schema(format!("weight column {w:?} is also an attribute")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub id: usize,
    pub attribute: String,
    pub value: String,
    label: String,
}

impl Atom {
    pub fn label(&self) -> &str {
        &self.label
    }
}

/// The atoms generated from one source attribute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeGroup {
    pub name: String,
    pub atoms: Vec<usize>,
    /// Single-atom boolean encoding.
    pub boolean_atom: bool,
}

/// One input row: object name plus attribute → value pairs. Attributes not
/// mentioned are missing for that object.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Row {
    pub name: String,
    pub values: Vec<(String, String)>,
}

impl Row {
    pub fn new(name: impl Into<String>) -> Self {
        Row {
            name: name.into(),
            values: Vec::new(),
        }
    }

    pub fn set(mut self, attribute: &str, value: &str) -> Self {
        self.values.push((attribute.to_string(), value.to_string()));
        self
    }
}

pub(crate) fn parse_bool(value: &str) -> Option<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "t" | "y" => Some(true),
        "0" | "false" | "no" | "f" | "n" => Some(false),
        _ => None,
    }
}

/// A classical formal concept: `extent↑ = intent` and `intent↓ = extent`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalConcept {
    pub extent: BitSet,
    pub intent: BitSet,
}

/// Immutable object × atom incidence table.
#[derive(Clone, Debug)]
pub struct Context {
    schema: Schema,
    atoms: Vec<Atom>,
    groups: Vec<AttributeGroup>,
    objects: Vec<String>,
    rows_pos: Vec<BitSet>,
    rows_known: Vec<BitSet>,
    cols_pos: Vec<BitSet>,
    cols_neg: Vec<BitSet>,
    label_index: HashMap<String, usize>,
}

fn atoms_for_schema(schema: &Schema) -> (Vec<Atom>, Vec<AttributeGroup>) {
    let mut atoms = Vec::new();
    let mut groups = Vec::new();
    for attr in &schema.attributes {
        let mut ids = Vec::new();
        let mut push = |value: &str, label: String| {
            let id = atoms.len();
            atoms.push(Atom {
                id,
                attribute: attr.name.clone(),
                value: value.to_string(),
                label,
            });
            ids.push(id);
        };
        let boolean_atom = match &attr.kind {
            AttributeKind::Boolean => match schema.boolean_encoding {
                BooleanEncoding::Atom => {
                    push("1", attr.name.clone());
                    true
                }
                BooleanEncoding::OneHot => {
                    for v in ["0", "1"] {
                        push(v, format!("{}={}", attr.name, v));
                    }
                    false
                }
            },
            AttributeKind::Categorical(values) => {
                for v in values {
                    push(v, format!("{}={}", attr.name, v));
                }
                false
            }
        };
        groups.push(AttributeGroup {
            name: attr.name.clone(),
            atoms: ids,
            boolean_atom,
        });
    }
    (atoms, groups)
}

/// Builds a context from tabular rows. Atom ids follow schema order, then
/// value order, so identical schemas give identical ids.
pub fn build_context(schema: &Schema, rows: &[Row]) -> Result<Context> {
    schema.validate()?;
    let (atoms, groups) = atoms_for_schema(schema);
    let n_atoms = atoms.len();
    let attr_index: HashMap<&str, usize> = schema
        .attributes
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();

    let mut rows_pos = Vec::with_capacity(rows.len());
    let mut rows_known = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let mut pos = BitSet::new(n_atoms);
        let mut known = BitSet::new(n_atoms);
        for (column, value) in &row.values {
            let &ai = attr_index.get(column.as_str()).ok_or_else(|| Error::UnknownAttribute {
                row: r,
                column: column.clone(),
            })?;
            if value.is_empty() {
                continue;
            }
            let group = &groups[ai];
            let out_of_domain = || Error::ValueOutOfDomain {
                row: r,
                column: column.clone(),
                value: value.clone(),
            };
            let hit = match &schema.attributes[ai].kind {
                AttributeKind::Boolean => {
                    let b = parse_bool(value).ok_or_else(out_of_domain)?;
                    if group.boolean_atom {
                        if b {
                            Some(group.atoms[0])
                        } else {
                            None
                        }
                    } else {
                        Some(group.atoms[usize::from(b)])
                    }
                }
                AttributeKind::Categorical(domain) => {
                    let vi = domain.iter().position(|d| d == value).ok_or_else(out_of_domain)?;
                    Some(group.atoms[vi])
                }
            };
            for &a in &group.atoms {
                known.insert(a);
                pos.remove(a);
            }
            if let Some(a) = hit {
                pos.insert(a);
            }
        }
        rows_pos.push(pos);
        rows_known.push(known);
    }
    let objects = rows.iter().map(|r| r.name.clone()).collect();
    Ok(Context::assemble(schema.clone(), atoms, groups, objects, rows_pos, rows_known))
}

impl Context {
    fn assemble(
        schema: Schema,
        atoms: Vec<Atom>,
        groups: Vec<AttributeGroup>,
        objects: Vec<String>,
        rows_pos: Vec<BitSet>,
        rows_known: Vec<BitSet>,
    ) -> Context {
        let n = objects.len();
        let mut cols_pos = vec![BitSet::new(n); atoms.len()];
        let mut cols_neg = vec![BitSet::new(n); atoms.len()];
        for g in 0..n {
            for a in rows_known[g].iter() {
                if rows_pos[g].contains(a) {
                    cols_pos[a].insert(g);
                } else {
                    cols_neg[a].insert(g);
                }
            }
        }
        let label_index = atoms.iter().map(|a| (a.label.clone(), a.id)).collect();
        Context {
            schema,
            atoms,
            groups,
            objects,
            rows_pos,
            rows_known,
            cols_pos,
            cols_neg,
            label_index,
        }
    }

    /// Boolean-atom context from a plain incidence matrix; every value known.
    pub fn from_boolean_rows<S: AsRef<str>>(attributes: &[S], rows: &[(String, Vec<bool>)]) -> Result<Context> {
        let mut schema = Schema::new(BooleanEncoding::Atom);
        for a in attributes {
            schema = schema.boolean(a.as_ref());
        }
        let rows: Vec<Row> = rows
            .iter()
            .map(|(name, bits)| {
                assert_eq!(bits.len(), attributes.len(), "row {name:?} has the wrong width");
                Row {
                    name: name.clone(),
                    values: attributes
                        .iter()
                        .zip(bits)
                        .map(|(a, &b)| (a.as_ref().to_string(), if b { "1" } else { "0" }.to_string()))
                        .collect(),
                }
            })
            .collect();
        build_context(&schema, &rows)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn groups(&self) -> &[AttributeGroup] {
        &self.groups
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn n_literals(&self) -> usize {
        2 * self.atoms.len()
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn object_names(&self) -> &[String] {
        &self.objects
    }

    pub fn object_name(&self, g: usize) -> &str {
        &self.objects[g]
    }

    pub fn all_objects(&self) -> BitSet {
        BitSet::full(self.n_objects())
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> {
        (0..self.n_literals()).map(Literal::from_code)
    }

    pub fn incident(&self, g: usize, atom: usize) -> bool {
        self.rows_pos[g].contains(atom)
    }

    pub fn known(&self, g: usize, atom: usize) -> bool {
        self.rows_known[g].contains(atom)
    }

    /// An object satisfies a negative literal only when the atom's attribute
    /// is known for it and the atom is absent.
    pub fn satisfies(&self, g: usize, lit: Literal) -> bool {
        self.literal_extent(lit).contains(g)
    }

    pub fn literal_extent(&self, lit: Literal) -> &BitSet {
        if lit.is_positive() {
            &self.cols_pos[lit.atom()]
        } else {
            &self.cols_neg[lit.atom()]
        }
    }

    /// Objects satisfying every literal; all objects for the empty set.
    pub fn extent(&self, literals: &[Literal]) -> BitSet {
        let mut out = self.all_objects();
        for &lit in literals {
            out.intersect_with(self.literal_extent(lit));
        }
        out
    }

    pub fn support(&self, literals: &[Literal]) -> usize {
        match literals {
            [] => self.n_objects(),
            [one] => self.literal_extent(*one).count(),
            [first, rest @ ..] => {
                let mut ext = self.literal_extent(*first).clone();
                for &lit in rest {
                    ext.intersect_with(self.literal_extent(lit));
                }
                ext.count()
            }
        }
    }

    pub fn atom_label(&self, atom: usize) -> &str {
        &self.atoms[atom].label
    }

    pub fn literal_label(&self, lit: Literal) -> String {
        if lit.is_positive() {
            self.atom_label(lit.atom()).to_string()
        } else {
            format!("!{}", self.atom_label(lit.atom()))
        }
    }

    pub fn parse_literal(&self, label: &str) -> Result<Literal> {
        let (positive, name) = match label.strip_prefix('!') {
            Some(rest) => (false, rest),
            None => (true, label),
        };
        let &atom = self
            .label_index
            .get(name)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        Ok(Literal::new(atom, positive))
    }

    pub fn group_of(&self, atom: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.atoms.contains(&atom))
            .expect("every atom belongs to a group")
    }

    /// The source value of `g` for attribute group `group`, or `None` when missing.
    pub fn value_of(&self, g: usize, group: usize) -> Option<&str> {
        let grp = &self.groups[group];
        let first = grp.atoms[0];
        if !self.rows_known[g].contains(first) {
            return None;
        }
        if grp.boolean_atom {
            return Some(if self.rows_pos[g].contains(first) { "1" } else { "0" });
        }
        grp.atoms
            .iter()
            .find(|&&a| self.rows_pos[g].contains(a))
            .map(|&a| self.atoms[a].value.as_str())
    }

    /// The object's full description: every known atom with its sign.
    /// Attribute groups with a missing value contribute nothing.
    pub fn object_intent(&self, g: usize) -> Result<LiteralSet> {
        if g >= self.n_objects() {
            return Err(Error::UnknownObject(g));
        }
        Ok(self.rows_known[g]
            .iter()
            .map(|a| Literal::new(a, self.rows_pos[g].contains(a)))
            .collect())
    }

    /// `A↑`: atoms incident to every object of `objects`; all atoms for `∅`.
    pub fn derive_up(&self, objects: &BitSet) -> BitSet {
        let mut out = BitSet::full(self.n_atoms());
        for g in objects.iter() {
            out.intersect_with(&self.rows_pos[g]);
        }
        out
    }

    /// `B↓`: objects incident to every atom of `atoms`; all objects for `∅`.
    pub fn derive_down(&self, atoms: &BitSet) -> BitSet {
        let mut out = self.all_objects();
        for a in atoms.iter() {
            out.intersect_with(&self.cols_pos[a]);
        }
        out
    }

    /// `L↓` for a signed literal set.
    pub fn derive_down_literals(&self, literals: &LiteralSet) -> BitSet {
        self.extent(literals.as_slice())
    }

    /// Every classical formal concept, in lectic order of intents.
    pub fn enumerate_formal_concepts(&self, cap: usize) -> Result<Vec<FormalConcept>> {
        let m = self.n_atoms();
        if m > CONCEPT_ENUMERATION_ATOM_LIMIT {
            return Err(Error::TooManyAtoms {
                atoms: m,
                limit: CONCEPT_ENUMERATION_ATOM_LIMIT,
            });
        }
        let row_masks: Vec<u32> = self
            .rows_pos
            .iter()
            .map(|r| r.iter().fold(0u32, |acc, a| acc | 1 << a))
            .collect();
        let all: u32 = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
        let closure = |intent: u32| -> (BitSet, u32) {
            let mut extent = BitSet::new(self.n_objects());
            let mut up = all;
            for (g, &row) in row_masks.iter().enumerate() {
                if row & intent == intent {
                    extent.insert(g);
                    up &= row;
                }
            }
            (extent, up)
        };
        let to_bits = |mask: u32| BitSet::from_indices(m, (0..m).filter(|i| mask >> i & 1 == 1));

        let mut out = Vec::new();
        let (mut extent, mut intent) = closure(0);
        loop {
            if out.len() == cap {
                return Err(Error::ConceptOverflow { cap });
            }
            out.push(FormalConcept {
                extent,
                intent: to_bits(intent),
            });
            // next intent in lectic order
            let mut current = intent;
            let mut next = None;
            for i in (0..m).rev() {
                let bit = 1u32 << i;
                if current & bit != 0 {
                    current &= !bit;
                } else {
                    let (ext, closed) = closure(current | bit);
                    if (closed & !current) & (bit - 1) == 0 {
                        next = Some((ext, closed));
                        break;
                    }
                }
            }
            match next {
                Some((e, i)) => {
                    extent = e;
                    intent = i;
                }
                None => break,
            }
        }
        Ok(out)
    }

    /// The dichotomically scaled context: one boolean atom per literal, in
    /// literal-code order, so scaled atom `i` is `Literal::from_code(i)`.
    pub fn literal_scaled(&self) -> Context {
        let mut schema = Schema::new(BooleanEncoding::Atom);
        for lit in self.literals() {
            schema = schema.boolean(&self.literal_label(lit));
        }
        let (atoms, groups) = atoms_for_schema(&schema);
        let n_lits = self.n_literals();
        let mut rows_pos = Vec::with_capacity(self.n_objects());
        for g in 0..self.n_objects() {
            rows_pos.push(BitSet::from_indices(
                n_lits,
                self.literals().filter(|&l| self.satisfies(g, l)).map(Literal::code),
            ));
        }
        let rows_known = vec![BitSet::full(n_lits); self.n_objects()];
        Context::assemble(schema, atoms, groups, self.objects.clone(), rows_pos, rows_known)
    }

    /// Rows for re-serialisation: per object, the source value of every attribute.
    pub fn to_rows(&self) -> Vec<Row> {
        (0..self.n_objects())
            .map(|g| Row {
                name: self.objects[g].clone(),
                values: (0..self.groups.len())
                    .filter_map(|gi| {
                        self.value_of(g, gi)
                            .map(|v| (self.groups[gi].name.clone(), v.to_string()))
                    })
                    .collect(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::ctx_a;

    fn objs(ctx: &Context, ids: &[usize]) -> BitSet {
        BitSet::from_indices(ctx.n_objects(), ids.iter().copied())
    }

    fn atoms(ctx: &Context, ids: &[usize]) -> BitSet {
        BitSet::from_indices(ctx.n_atoms(), ids.iter().copied())
    }

    #[test]
    fn negation_is_an_involution() {
        let l = Literal::negative(7);
        assert_eq!(!!l, l);
        assert_eq!((!l).atom(), 7);
        assert!((!l).is_positive());
    }

    #[test]
    fn literal_set_is_canonical() {
        let a: LiteralSet = [Literal::negative(2), Literal::positive(0), Literal::positive(2)]
            .into_iter()
            .collect();
        let b: LiteralSet = [Literal::positive(2), Literal::negative(2), Literal::positive(0), Literal::positive(0)]
            .into_iter()
            .collect();
        assert_eq!(a, b);
        assert!(!a.is_consistent());
        assert!(a.without(Literal::negative(2)).is_consistent());
        assert!(LiteralSet::from_iter([Literal::positive(0)]).is_subset(&a));
        assert!(!LiteralSet::from_iter([Literal::negative(0)]).is_subset(&a));
    }

    #[test]
    fn single_binary_attribute_one_hot() {
        let schema = Schema::new(BooleanEncoding::Atom).categorical("x", &["0", "1"]);
        let rows: Vec<Row> = ["0", "1", "1", "0"]
            .iter()
            .enumerate()
            .map(|(i, v)| Row::new(format!("o{i}")).set("x", v))
            .collect();
        let ctx = build_context(&schema, &rows).unwrap();
        assert_eq!(ctx.n_atoms(), 2);
        assert_eq!(ctx.n_objects(), 4);
        assert_eq!(ctx.atom_label(0), "x=0");
        assert_eq!(ctx.atom_label(1), "x=1");
        assert!(ctx.incident(1, 1) && !ctx.incident(1, 0));
    }

    #[test]
    fn missing_value_omits_group_from_intent() {
        let schema = Schema::new(BooleanEncoding::Atom)
            .categorical("x", &["p", "q"])
            .boolean("y");
        let rows = vec![Row::new("o").set("y", "1"), Row::new("e")];
        let ctx = build_context(&schema, &rows).unwrap();
        for a in 0..2 {
            assert!(!ctx.incident(0, a));
            assert!(!ctx.satisfies(0, Literal::negative(a)));
        }
        assert_eq!(ctx.object_intent(0).unwrap(), LiteralSet::from_iter([Literal::positive(2)]));
        assert!(ctx.object_intent(1).unwrap().is_empty());
    }

    #[test]
    fn ctx_a_encodings() {
        let rows: Vec<Row> = [[1, 1, 1], [1, 1, 0], [0, 1, 1], [0, 0, 0]]
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = Row::new(format!("g{}", i + 1));
                for (name, v) in ["a", "b", "c"].iter().zip(r) {
                    row = row.set(name, &v.to_string());
                }
                row
            })
            .collect();
        let one_hot = Schema::new(BooleanEncoding::OneHot).boolean("a").boolean("b").boolean("c");
        let ctx = build_context(&one_hot, &rows).unwrap();
        assert_eq!(ctx.n_atoms(), 6);
        // atoms: a=0 a=1 b=0 b=1 c=0 c=1
        let expected = [
            [false, true, false, true, false, true],
            [false, true, false, true, true, false],
            [true, false, false, true, false, true],
            [true, false, true, false, true, false],
        ];
        for (g, row) in expected.iter().enumerate() {
            for (a, &bit) in row.iter().enumerate() {
                assert_eq!(ctx.incident(g, a), bit, "g{} atom {}", g + 1, a);
            }
        }
        let boolean = Schema::new(BooleanEncoding::Atom).boolean("a").boolean("b").boolean("c");
        let ctx = build_context(&boolean, &rows).unwrap();
        assert_eq!(ctx.n_atoms(), 3);
        assert_eq!(ctx_a().object_intent(1).unwrap(), ctx.object_intent(1).unwrap());
    }

    #[test]
    fn build_errors_carry_coordinates() {
        let schema = Schema::new(BooleanEncoding::Atom).categorical("x", &["p"]);
        let err = build_context(&schema, &[Row::new("o").set("x", "p"), Row::new("o2").set("x", "z")]).unwrap_err();
        assert!(matches!(err, Error::ValueOutOfDomain { row: 1, ref column, .. } if column == "x"));
        let err = build_context(&schema, &[Row::new("o").set("w", "p")]).unwrap_err();
        assert!(matches!(err, Error::UnknownAttribute { row: 0, .. }));
        let schema = Schema::new(BooleanEncoding::Atom).boolean("b");
        let err = build_context(&schema, &[Row::new("o").set("b", "maybe")]).unwrap_err();
        assert!(matches!(err, Error::ValueOutOfDomain { .. }));
    }

    #[test]
    fn ctx_a_intents() {
        let ctx = ctx_a();
        let i1 = ctx.object_intent(0).unwrap();
        assert_eq!(i1, (0..3).map(Literal::positive).collect());
        let i4 = ctx.object_intent(3).unwrap();
        assert_eq!(i4, (0..3).map(Literal::negative).collect());
        assert!(matches!(ctx.object_intent(4), Err(Error::UnknownObject(4))));
    }

    #[test]
    fn ctx_a_derivations() {
        let ctx = ctx_a();
        assert_eq!(ctx.derive_up(&objs(&ctx, &[0, 1])), atoms(&ctx, &[0, 1]));
        assert_eq!(ctx.derive_up(&objs(&ctx, &[])), atoms(&ctx, &[0, 1, 2]));
        assert_eq!(ctx.derive_up(&objs(&ctx, &[0, 1, 2, 3])), atoms(&ctx, &[]));
        assert_eq!(ctx.derive_down(&atoms(&ctx, &[0])), objs(&ctx, &[0, 1]));
        assert_eq!(ctx.derive_down(&atoms(&ctx, &[])), objs(&ctx, &[0, 1, 2, 3]));
        assert_eq!(ctx.derive_down(&atoms(&ctx, &[0, 2])), objs(&ctx, &[0]));
        let lits: LiteralSet = [Literal::positive(1), Literal::negative(0)].into_iter().collect();
        assert_eq!(ctx.derive_down_literals(&lits), objs(&ctx, &[2]));
    }

    #[test]
    fn ctx_a_concepts() {
        let ctx = ctx_a();
        let concepts = ctx.enumerate_formal_concepts(100).unwrap();
        assert!(concepts.contains(&FormalConcept {
            extent: objs(&ctx, &[0, 1]),
            intent: atoms(&ctx, &[0, 1]),
        }));
        for c in &concepts {
            assert_eq!(ctx.derive_up(&c.extent), c.intent);
            assert_eq!(ctx.derive_down(&c.intent), c.extent);
        }
        assert!(matches!(ctx.enumerate_formal_concepts(2), Err(Error::ConceptOverflow { cap: 2 })));
    }

    #[test]
    fn empty_context_has_one_concept() {
        let ctx = Context::from_boolean_rows(&["a", "b"], &[]).unwrap();
        let concepts = ctx.enumerate_formal_concepts(10).unwrap();
        assert_eq!(concepts.len(), 1);
        assert!(concepts[0].extent.is_empty());
        assert_eq!(concepts[0].intent.count(), 2);
    }

    #[test]
    fn literal_scaling_follows_literal_codes() {
        let ctx = ctx_a();
        let scaled = ctx.literal_scaled();
        assert_eq!(scaled.n_atoms(), 6);
        assert_eq!(scaled.atom_label(3), "!b");
        for g in 0..ctx.n_objects() {
            for lit in ctx.literals() {
                assert_eq!(scaled.incident(g, lit.code()), ctx.satisfies(g, lit));
            }
        }
    }

    #[test]
    fn labels_round_trip() {
        let ctx = ctx_a();
        for lit in ctx.literals() {
            assert_eq!(ctx.parse_literal(&ctx.literal_label(lit)).unwrap(), lit);
        }
        assert!(ctx.parse_literal("!zz").is_err());
    }
}
