//! Plain-text file formats: schema sidecar, CSV data, JSONL rule and
//! concept dumps, the grouped text report and the ground-truth labels file.
//!
//! Schema sidecar, one declaration per line:
//!
//! ```text
//! # comment
//! @boolean-encoding = atom
//! @weight-column = w
//! smoker = bool
//! colour = red, green, blue
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::context::{build_context, AttributeKind, BooleanEncoding, Context, LiteralSet, Row, Schema};
use crate::error::{Error, Result};
use crate::fixpoint::FixedPointConcept;
use crate::measure::Measure;
use crate::rules::{CausalRule, Mode, RuleSet};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_schema(text: &str, path: &Path) -> Result<Schema> {
    let mut schema = Schema::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::parse(path, format!("line {}: {msg}", i + 1));
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected `name = values`, got {line:?}")))?;
        match key {
            "@boolean-encoding" => {
                schema.boolean_encoding = match value {
                    "atom" => BooleanEncoding::Atom,
                    "onehot" => BooleanEncoding::OneHot,
                    other => return Err(err(format!("unknown boolean encoding {other:?}"))),
                }
            }
            "@weight-column" => schema.weight_column = Some(value.to_string()),
            k if k.starts_with('@') => return Err(err(format!("unknown directive {k:?}"))),
            name if value == "bool" => schema = schema.boolean(name),
            name => {
                let values: Vec<&str> = value.split(',').map(str::trim).collect();
                if values.iter().any(|v| v.is_empty()) {
                    return Err(err(format!("attribute {name:?} has an empty value")));
                }
                schema = schema.categorical(name, &values);
            }
        }
    }
    schema.validate().map_err(|e| Error::parse(path, e.to_string()))?;
    Ok(schema)
}

pub fn read_schema(path: &Path) -> Result<Schema> {
    parse_schema(&read_text(path)?, path)
}

pub fn render_schema(schema: &Schema) -> String {
    let mut out = String::new();
    let encoding = match schema.boolean_encoding {
        BooleanEncoding::Atom => "atom",
        BooleanEncoding::OneHot => "onehot",
    };
    writeln!(out, "@boolean-encoding = {encoding}").unwrap();
    if let Some(w) = &schema.weight_column {
        writeln!(out, "@weight-column = {w}").unwrap();
    }
    for attr in &schema.attributes {
        match &attr.kind {
            AttributeKind::Boolean => writeln!(out, "{} = bool", attr.name).unwrap(),
            AttributeKind::Categorical(values) => writeln!(out, "{} = {}", attr.name, values.join(", ")).unwrap(),
        }
    }
    out
}

/// A parsed data file.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub context: Context,
    pub measure: Measure,
}

/// Reads CSV with a header row. The first column names the object, the
/// remaining columns must be schema attributes or the weight column. Empty
/// cells are missing values.
pub fn parse_csv<R: Read>(reader: R, schema: &Schema, path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::parse(path, "missing header row"));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let weight_col = schema.weight_column.as_deref();
    for attr in &schema.attributes {
        if !columns.contains(&attr.name) {
            return Err(Error::parse(path, format!("declared attribute {:?} has no column", attr.name)));
        }
    }
    if let Some(w) = weight_col {
        if !columns.iter().any(|c| c == w) {
            return Err(Error::parse(path, format!("weight column {w:?} is missing")));
        }
    }
    let mut rows = Vec::new();
    let mut weights = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Row::new(record.get(0).unwrap_or("").trim());
        for (column, value) in columns.iter().zip(record.iter().skip(1)) {
            let value = value.trim();
            if Some(column.as_str()) == weight_col {
                let w: f64 = value
                    .parse()
                    .map_err(|_| Error::parse(path, format!("line {line}: weight {value:?} is not a number")))?;
                weights.push(w);
            } else {
                row = row.set(column, value);
            }
        }
        rows.push(row);
    }
    let context = build_context(schema, &rows)?;
    let measure = if weight_col.is_some() {
        Measure::from_weights(weights)?
    } else {
        Measure::uniform()
    };
    Ok(Dataset { context, measure })
}

pub fn read_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, schema, path)
}

/// CSV text for a context; the first header cell is `object`.
pub fn render_csv(ctx: &Context) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["object".to_string()];
    header.extend(ctx.groups().iter().map(|g| g.name.clone()));
    w.write_record(&header)?;
    for g in 0..ctx.n_objects() {
        let mut rec = vec![ctx.object_name(g).to_string()];
        rec.extend((0..ctx.groups().len()).map(|gi| ctx.value_of(g, gi).unwrap_or("").to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

/// One line of the rule dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub premise: Vec<String>,
    pub conclusion: String,
    pub n_premise: u64,
    pub n_both: u64,
    pub eta: f64,
    pub p_value: Option<f64>,
    pub chain_len: usize,
}

fn labels(ctx: &Context, set: &LiteralSet) -> Vec<String> {
    set.iter().map(|l| ctx.literal_label(l)).collect()
}

pub fn render_rules(ctx: &Context, rules: &RuleSet) -> String {
    let mut out = String::new();
    for r in rules.iter() {
        let rec = RuleRecord {
            premise: labels(ctx, &r.premise),
            conclusion: ctx.literal_label(r.conclusion),
            n_premise: r.n_premise,
            n_both: r.n_both,
            eta: r.eta,
            p_value: r.p_value,
            chain_len: r.chain_len,
        };
        out.push_str(&serde_json::to_string(&rec).expect("rule record serialises"));
        out.push('\n');
    }
    out
}

/// Parses a rule dump against the context it was mined from.
pub fn parse_rules(ctx: &Context, text: &str, path: &Path) -> Result<RuleSet> {
    let mut rules = Vec::new();
    let mut fisher = false;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(path, format!("line {}: {msg}", i + 1));
        let rec: RuleRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let premise = rec
            .premise
            .iter()
            .map(|l| ctx.parse_literal(l))
            .collect::<Result<LiteralSet>>()
            .map_err(|e| err(e.to_string()))?;
        let conclusion = ctx.parse_literal(&rec.conclusion).map_err(|e| err(e.to_string()))?;
        fisher |= rec.p_value.is_some();
        rules.push(CausalRule {
            premise,
            conclusion,
            n_premise: rec.n_premise,
            n_both: rec.n_both,
            eta: rec.eta,
            p_value: rec.p_value,
            chain_len: rec.chain_len,
        });
    }
    let mode = if fisher { Mode::Fisher } else { Mode::Exact };
    let max_len = rules.iter().map(|r| r.premise.len()).max().unwrap_or(0);
    RuleSet::new(ctx.n_literals(), rules, mode, 0.0, max_len).map_err(|e| Error::parse(path, e.to_string()))
}

/// One fixed point as written to the concept dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptRecord {
    pub intent: Vec<String>,
    pub extent: Vec<String>,
    pub int_value: f64,
    pub seed_count: usize,
}

pub fn concept_records(ctx: &Context, concepts: &[FixedPointConcept]) -> Vec<ConceptRecord> {
    concepts
        .iter()
        .map(|c| ConceptRecord {
            intent: labels(ctx, &c.intent),
            extent: c.extent.iter().map(|g| ctx.object_name(g).to_string()).collect(),
            int_value: c.int_value,
            seed_count: c.seeds.len(),
        })
        .collect()
}

pub fn render_concepts_json(records: &[ConceptRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(rec).expect("concept record serialises"));
        out.push('\n');
    }
    out
}

pub fn parse_concepts_json(text: &str, path: &Path) -> Result<Vec<ConceptRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, format!("line {}: {e}", i + 1))))
        .collect()
}

/// Bare token when unambiguous, JSON string otherwise.
fn token(s: &str) -> String {
    let plain = !s.is_empty() && !s.starts_with(['!', '"']) && !s.contains(|c: char| c.is_whitespace() || c == ':');
    if plain {
        s.to_string()
    } else {
        serde_json::to_string(s).expect("string serialises")
    }
}

/// Whitespace-separated tokens with their `!` prefix split off.
fn tokens(line: &str) -> std::result::Result<Vec<(bool, String)>, String> {
    let mut out = Vec::new();
    let mut rest = line.trim_start();
    while !rest.is_empty() {
        let (negated, body) = match rest.strip_prefix('!') {
            Some(b) => (true, b),
            None => (false, rest),
        };
        let (tok, tail) = if body.starts_with('"') {
            let mut de = serde_json::Deserializer::from_str(body).into_iter::<String>();
            let s = de.next().ok_or("unterminated string")?.map_err(|e| e.to_string())?;
            (s, &body[de.byte_offset()..])
        } else {
            let end = body.find(char::is_whitespace).unwrap_or(body.len());
            (body[..end].to_string(), &body[end..])
        };
        out.push((negated, tok));
        rest = tail.trim_start();
    }
    Ok(out)
}

/// Grouped text report. Each concept lists, per source attribute, the
/// values it asserts and (prefixed with `!`) the values it excludes.
/// [`parse_report`] reads it back into the same records.
pub fn render_report(ctx: &Context, records: &[ConceptRecord], n_rules: usize) -> String {
    let mut out = String::new();
    writeln!(out, "# {} fixed points from {} objects, {} rules", records.len(), ctx.n_objects(), n_rules).unwrap();
    if n_rules == 0 {
        writeln!(out, "# no rules: every object description is its own fixed point").unwrap();
    }
    for (i, rec) in records.iter().enumerate() {
        writeln!(out, "concept {}", i + 1).unwrap();
        writeln!(out, "  seeds: {}", rec.seed_count).unwrap();
        writeln!(out, "  int: {}", rec.int_value).unwrap();
        for group in ctx.groups() {
            let mut items = Vec::new();
            for label in &rec.intent {
                let Ok(lit) = ctx.parse_literal(label) else { continue };
                if ctx.group_of(lit.atom()) != ctx.group_of(group.atoms[0]) {
                    continue;
                }
                let atom = &ctx.atoms()[lit.atom()];
                let value = if group.boolean_atom { "true" } else { atom.value.as_str() };
                let sign = if lit.is_positive() { "" } else { "!" };
                items.push(format!("{sign}{}", token(value)));
            }
            if !items.is_empty() {
                writeln!(out, "  {}: {}", token(&group.name), items.join(" ")).unwrap();
            }
        }
        let names: Vec<String> = rec.extent.iter().map(|n| token(n)).collect();
        writeln!(out, "  extent: {}", names.join(" ")).unwrap();
    }
    out
}

pub fn parse_report(ctx: &Context, text: &str, path: &Path) -> Result<Vec<ConceptRecord>> {
    let mut records: Vec<ConceptRecord> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let err = |msg: String| Error::parse(path, format!("line {}: {msg}", i + 1));
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with("concept ") {
            records.push(ConceptRecord {
                intent: Vec::new(),
                extent: Vec::new(),
                int_value: 0.0,
                seed_count: 0,
            });
            continue;
        }
        let rec = records.last_mut().ok_or_else(|| err("field before the first concept".into()))?;
        let (key, rest) = split_key(line).ok_or_else(|| err(format!("expected `key: values`, got {line:?}")))?;
        let toks = tokens(rest).map_err(err)?;
        match key.as_str() {
            "seeds" => rec.seed_count = rest.trim().parse().map_err(|_| err("bad seed count".into()))?,
            "int" => rec.int_value = rest.trim().parse().map_err(|_| err("bad int value".into()))?,
            "extent" => rec.extent = toks.into_iter().map(|(_, t)| t).collect(),
            attr => {
                let group = ctx
                    .groups()
                    .iter()
                    .find(|g| g.name == attr)
                    .ok_or_else(|| err(format!("unknown attribute {attr:?}")))?;
                for (neg, value) in toks {
                    let atom = if group.boolean_atom {
                        group.atoms[0]
                    } else {
                        *group
                            .atoms
                            .iter()
                            .find(|&&a| ctx.atoms()[a].value == value)
                            .ok_or_else(|| err(format!("unknown value {value:?} of {attr:?}")))?
                    };
                    let label = ctx.atom_label(atom);
                    rec.intent.push(if neg { format!("!{label}") } else { label.to_string() });
                }
            }
        }
    }
    // intents are listed by literal code in dumps
    for rec in &mut records {
        let set: LiteralSet = rec
            .intent
            .iter()
            .map(|l| ctx.parse_literal(l))
            .collect::<Result<_>>()?;
        rec.intent = labels(ctx, &set);
    }
    Ok(records)
}

fn split_key(line: &str) -> Option<(String, &str)> {
    if line.starts_with('"') {
        let mut de = serde_json::Deserializer::from_str(line).into_iter::<String>();
        let key = de.next()?.ok()?;
        let rest = line[de.byte_offset()..].strip_prefix(':')?;
        Some((key, rest))
    } else {
        let (k, rest) = line.split_once(':')?;
        Some((k.to_string(), rest))
    }
}

/// Ground-truth labels as `object,label` CSV.
pub fn render_labels(names: &[String], labels: &[usize]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["object", "label"])?;
    for (n, l) in names.iter().zip(labels) {
        w.write_record([n.as_str(), &l.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn read_labels(path: &Path) -> Result<Vec<(String, usize)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let label = rec
            .get(1)
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| Error::parse(path, format!("bad label row {rec:?}")))?;
        out.push((rec.get(0).unwrap_or("").to_string(), label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixpoint::cluster;
    use crate::miner::{mine_mscr, MineConfig};
    use crate::testutil::ctx_a;

    fn p() -> &'static Path {
        Path::new("test")
    }

    const SCHEMA: &str = "# pets\n@boolean-encoding = atom\nkind = cat, dog\nindoor = bool\n";

    #[test]
    fn schema_round_trip() {
        let s = parse_schema(SCHEMA, p()).unwrap();
        assert_eq!(parse_schema(&render_schema(&s), p()).unwrap(), s);
        assert!(parse_schema("x = \n", p()).is_err());
        assert!(parse_schema("@colour = red\n", p()).is_err());
        assert!(parse_schema("a = bool\na = bool\n", p()).is_err());
    }

    #[test]
    fn csv_with_missing_values() {
        let schema = parse_schema(SCHEMA, p()).unwrap();
        let data = "name,kind,indoor\ntom,cat,1\nrex,dog,\nfelix,,false\n";
        let ds = parse_csv(data.as_bytes(), &schema, p()).unwrap();
        let ctx = &ds.context;
        assert_eq!(ctx.n_objects(), 3);
        assert_eq!(ctx.value_of(1, 1), None);
        assert_eq!(ctx.value_of(2, 0), None);
        assert_eq!(ctx.value_of(2, 1), Some("0"));
        let again = parse_csv(render_csv(ctx).unwrap().as_bytes(), &schema, p()).unwrap();
        for g in 0..3 {
            assert_eq!(again.context.object_intent(g).unwrap(), ctx.object_intent(g).unwrap());
        }
    }

    #[test]
    fn csv_errors() {
        let schema = parse_schema(SCHEMA, p()).unwrap();
        assert!(matches!(
            parse_csv("n,kind,indoor\nx,bird,1\n".as_bytes(), &schema, p()),
            Err(Error::ValueOutOfDomain { .. })
        ));
        assert!(matches!(
            parse_csv("n,kind,indoor,age\nx,cat,1,3\n".as_bytes(), &schema, p()),
            Err(Error::UnknownAttribute { .. })
        ));
        assert!(parse_csv("n,kind\nx,cat\n".as_bytes(), &schema, p()).is_err());
    }

    #[test]
    fn weight_column() {
        let mut schema = parse_schema(SCHEMA, p()).unwrap();
        schema.weight_column = Some("w".into());
        let ds = parse_csv("n,kind,indoor,w\nx,cat,1,1\ny,dog,0,3\n".as_bytes(), &schema, p()).unwrap();
        assert!(!ds.measure.is_uniform());
        assert!((ds.measure.weight(1, 2) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rules_round_trip() {
        let ctx = ctx_a();
        let rs = mine_mscr(&ctx, &Measure::uniform(), &MineConfig::exact(3)).unwrap();
        let text = render_rules(&ctx, &rs);
        let back = parse_rules(&ctx, &text, p()).unwrap();
        assert_eq!(back.rules(), rs.rules());
        assert_eq!(render_rules(&ctx, &back), text);
        assert!(text.lines().next().unwrap().starts_with("{\"premise\":"));
    }

    #[test]
    fn report_matches_json() {
        let ctx = ctx_a();
        let rs = mine_mscr(&ctx, &Measure::uniform(), &MineConfig::exact(3)).unwrap();
        let records = concept_records(&ctx, &cluster(&ctx, &rs, 1e-4).unwrap());
        let json = parse_concepts_json(&render_concepts_json(&records), p()).unwrap();
        let text = parse_report(&ctx, &render_report(&ctx, &records, rs.len()), p()).unwrap();
        assert_eq!(json, records);
        assert_eq!(text, records);
    }

    #[test]
    fn report_quotes_awkward_values() {
        let schema = Schema::default().categorical("colour name", &["light blue", "!red"]);
        let rows = vec![Row::new("first one").set("colour name", "light blue"), Row::new("b").set("colour name", "!red")];
        let ctx = build_context(&schema, &rows).unwrap();
        let concepts = cluster(&ctx, &RuleSet::empty(ctx.n_literals()), 1e-4).unwrap();
        let records = concept_records(&ctx, &concepts);
        let report = render_report(&ctx, &records, 0);
        assert!(report.contains("no rules"));
        assert_eq!(parse_report(&ctx, &report, p()).unwrap(), records);
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let names = vec!["a".to_string(), "b".to_string()];
        write_text(&path, &render_labels(&names, &[3, 1]).unwrap()).unwrap();
        assert_eq!(read_labels(&path).unwrap(), vec![("a".into(), 3), ("b".into(), 1)]);
    }
}
