use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fixclass::context::{build_context, LiteralSet};
use fixclass::fixpoint::{assign, cluster_with, ClusterOptions, FixedPointConcept};
use fixclass::io;
use fixclass::oracle::{random_context, verify_theorems_with, Fault, OracleBudget, Property, TheoremReport};
use fixclass::{generate_synthetic, mine_mscr, BitSet, Mode, RunConfig, SyntheticSpec};

#[derive(Parser)]
#[command(name = "fixclass", version, about = "Causal rule mining and fixed-point concept discovery")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FIXCLASS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine causal rules from a CSV context.
    Mine(MineArgs),
    /// Climb every object description to a fixed point and group them.
    Cluster(ClusterArgs),
    /// Check the closure and fixed-point properties on small contexts.
    Verify(VerifyArgs),
    /// Write prototype-and-copies synthetic data.
    Generate(GenerateArgs),
    /// Assign new rows to previously found fixed points.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args)]
struct MineArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    max_premise_len: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Fisher)]
    mode: ModeArg,
    /// Keep only the highest-probability terminal rules per conclusion.
    #[arg(long)]
    mscr_strict: bool,
    /// Refinements kept per premise in fisher mode.
    #[arg(long, default_value_t = 8, conflicts_with = "no_beam")]
    beam_width: usize,
    /// Unbounded fisher search.
    #[arg(long)]
    no_beam: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Fisher,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the grouped text report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = fixclass::measure::DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Random contexts to check.
    #[arg(long, default_value_t = 50)]
    contexts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    budget_objects: usize,
    #[arg(long, default_value_t = 5)]
    budget_atoms: usize,
    #[arg(long, default_value_t = 3)]
    max_premise: usize,
    /// Check this context instead of random ones.
    #[arg(long, requires = "schema")]
    input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    schema: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    schema_out: PathBuf,
    #[arg(long)]
    labels_out: PathBuf,
    #[arg(long, default_value_t = 12)]
    classes: usize,
    #[arg(long, default_value_t = 30)]
    copies: usize,
    #[arg(long, default_value_t = 24)]
    attributes: usize,
    #[arg(long, default_value_t = 8)]
    values: usize,
    /// Defaults to half the attribute count.
    #[arg(long)]
    min_hamming: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    concepts: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = fixclass::measure::DEFAULT_EPSILON)]
    epsilon: f64,
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    VerificationFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "thread count must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Mine(a) => mine(a),
        Command::Cluster(a) => cluster(a),
        Command::Verify(a) => verify(a),
        Command::Generate(a) => generate(a),
        Command::Classify(a) => classify(a),
    }
}

fn load(data: &DataArgs) -> Result<io::Dataset> {
    let schema = io::read_schema(&data.schema)?;
    Ok(io::read_csv(&data.input, &schema)?)
}

fn mine(a: MineArgs) -> Result<Outcome> {
    let config = RunConfig {
        alpha: a.alpha,
        max_premise_len: a.max_premise_len,
        mode: match a.mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Fisher => Mode::Fisher,
        },
        mscr_strict: a.mscr_strict,
        beam_width: (!a.no_beam).then_some(a.beam_width),
        ..RunConfig::default()
    };
    config.validate()?;
    let ds = load(&a.data)?;
    let start = Instant::now();
    let rules = mine_mscr(&ds.context, &ds.measure, &config.mine_config())?;
    let elapsed = start.elapsed();
    io::write_text(&a.out, &io::render_rules(&ds.context, &rules))?;
    let beam = config.beam_width.map_or("none".to_string(), |b| b.to_string());
    println!(
        "mined {} rules from {} objects in {:.3}s (mode {}, alpha {}, max-premise-len {}, beam-width {}, mscr-strict {})",
        rules.len(),
        ds.context.n_objects(),
        elapsed.as_secs_f64(),
        if config.mode == Mode::Exact { "exact" } else { "fisher" },
        config.alpha,
        config.max_premise_len,
        beam,
        config.mscr_strict
    );
    Ok(Outcome::Ok)
}

fn cluster(a: ClusterArgs) -> Result<Outcome> {
    let config = RunConfig {
        epsilon: a.epsilon,
        ..RunConfig::default()
    };
    config.validate()?;
    let ds = load(&a.data)?;
    let rules = io::parse_rules(&ds.context, &io::read_text(&a.rules)?, &a.rules)?;
    let options = ClusterOptions {
        epsilon: a.epsilon,
        ..ClusterOptions::default()
    };
    let report = cluster_with(&ds.context, &rules, &options)?;
    let records = io::concept_records(&ds.context, &report.concepts);
    let text = io::render_report(&ds.context, &records, rules.len());
    let out = match a.format {
        Format::Json => io::render_concepts_json(&records),
        Format::Text => text.clone(),
    };
    io::write_text(&a.out, &out)?;
    if let Some(path) = &a.report {
        io::write_text(path, &text)?;
    }
    println!(
        "{} fixed points from {} objects, {} rules, {} climb steps",
        records.len(),
        ds.context.n_objects(),
        rules.len(),
        report.steps
    );
    if rules.is_empty() {
        println!("no rules: every object description is its own fixed point");
    }
    Ok(Outcome::Ok)
}

fn verify(a: VerifyArgs) -> Result<Outcome> {
    let budget = OracleBudget {
        max_objects: a.budget_objects,
        max_atoms: a.budget_atoms,
        max_premise: a.max_premise,
    };
    budget.validate()?;
    let fault = if a.inject_fault { Fault::NegatedConclusions } else { Fault::None };
    let mut total = TheoremReport::default();
    let mut failing_contexts = 0;
    let mut check = |ctx: &fixclass::Context| -> Result<()> {
        let r = verify_theorems_with(ctx, &budget, fault)?;
        if let Some(f) = r.failures.first() {
            failing_contexts += 1;
            if failing_contexts <= 3 {
                let seed: Vec<String> = f.literals.iter().map(|l| ctx.literal_label(l)).collect();
                println!(
                    "counterexample {} on {} objects x {} atoms: seed {{{}}}: {}",
                    f.property.name(),
                    ctx.n_objects(),
                    ctx.n_atoms(),
                    seed.join(", "),
                    f.detail
                );
            }
        }
        total.merge(r);
        Ok(())
    };
    let n_contexts = match (&a.input, &a.schema) {
        (Some(input), Some(schema)) => {
            let ds = load(&DataArgs {
                input: input.clone(),
                schema: schema.clone(),
            })?;
            check(&ds.context)?;
            1
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            for _ in 0..a.contexts {
                check(&random_context(&mut rng, &budget))?;
            }
            a.contexts
        }
    };
    for p in Property::ALL {
        let failed = total.failures_of(p);
        println!(
            "{} {}: {} cases, {} failures",
            if failed == 0 { "PASS" } else { "FAIL" },
            p.name(),
            total.cases_of(p),
            failed
        );
    }
    println!("{failing_contexts} of {n_contexts} contexts failed");
    Ok(if total.passed() {
        Outcome::Ok
    } else {
        Outcome::VerificationFailed
    })
}

fn generate(a: GenerateArgs) -> Result<Outcome> {
    let spec = SyntheticSpec {
        n_classes: a.classes,
        copies_per_class: a.copies,
        n_attributes: a.attributes,
        values_per_attribute: a.values,
        min_pairwise_hamming: a.min_hamming,
        noise_rate: a.noise,
    };
    let s = generate_synthetic(&spec, a.seed)?;
    io::write_text(&a.out, &io::render_csv(&s.context)?)?;
    io::write_text(&a.schema_out, &io::render_schema(&spec.schema()))?;
    io::write_text(&a.labels_out, &io::render_labels(s.context.object_names(), &s.labels)?)?;
    println!(
        "generated {} objects over {} attributes, {} noisy cells",
        s.context.n_objects(),
        spec.n_attributes,
        s.flipped.len()
    );
    Ok(Outcome::Ok)
}

fn classify(a: ClassifyArgs) -> Result<Outcome> {
    let ds = load(&a.data)?;
    let ctx = &ds.context;
    // labels only; no training rows are needed to read rules and concepts
    let vocabulary = build_context(ctx.schema(), &[])?;
    let rules = io::parse_rules(&vocabulary, &io::read_text(&a.rules)?, &a.rules)?;
    let concepts = read_concepts(&vocabulary, &a.concepts)?;
    let mut out = String::from("object,concept\n");
    for g in 0..ctx.n_objects() {
        let description = ctx.object_intent(g)?;
        let idx = assign(&rules, &concepts, &description, a.epsilon)?;
        let cell = idx.map_or(String::new(), |i| (i + 1).to_string());
        out.push_str(&format!("{},{cell}\n", csv_field(ctx.object_name(g))));
    }
    io::write_text(&a.out, &out)?;
    println!("classified {} objects against {} fixed points", ctx.n_objects(), concepts.len());
    Ok(Outcome::Ok)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn read_concepts(vocabulary: &fixclass::Context, path: &Path) -> Result<Vec<FixedPointConcept>> {
    let records = io::parse_concepts_json(&io::read_text(path)?, path)?;
    records
        .into_iter()
        .map(|rec| {
            let intent = rec
                .intent
                .iter()
                .map(|l| vocabulary.parse_literal(l))
                .collect::<fixclass::Result<LiteralSet>>()
                .with_context(|| format!("{}: concept intent", path.display()))?;
            Ok(FixedPointConcept {
                intent,
                extent: BitSet::new(0),
                int_value: rec.int_value,
                seeds: Vec::new(),
                consistent: true,
            })
        })
        .collect()
}
