//! Command-line front end: corpus generation, formula learning, block
//! construction, evaluation, epsilon sweeps, and the non-learned
//! baselines behind one executable.
//!
//! Every run that writes an artifact also writes a JSON manifest echoing
//! the resolved arguments (next to the primary output, or wherever
//! `--manifest` points), so a result can be reproduced from the manifest
//! and its seed alone. All randomness flows through the seeds recorded
//! there. Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::blocker::{
    apply_conjunction_blocks, block_sizes, candidate_pairs_nondisjoint, canopy_pairs,
    filter_pairs, heuristic_blocks, render_blocks, BlockCounters,
};
use crate::datagen::{generate, GenParams};
use crate::evaluation::{
    block_size_histogram, compute_metrics, curve_csv, cv_splits, metrics_from_counts,
    pc_rr_curve, CvConfig, FoldEval, FormKind, SplitMode, DEFAULT_EPSILON_GRID,
    DEFAULT_HIST_BOUNDS,
};
use crate::formula::text::parse_formula;
use crate::formula::BlockingFormula;
use crate::gain::GainKind;
use crate::learner::{
    learn_cnf, learn_disjoint_cnf, learn_dnf, CoverageMatrix, LearnerConfig, DEFAULT_MAX_TERMS,
};
use crate::model::{
    labels_from_truth, load_labeled_pairs, load_pairs_csv, load_records, write_pairs_csv,
    LabeledPairSet, RecordFormat, RecordSet,
};
use crate::predicate::{generate_predicate_set, PredicateFlavor, PredicateSet};
use crate::tfidf::TfidfModel;

// ---------------------------------------------------------------------
// Argument grammar
// ---------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "blocklearn",
    version,
    about = "Learn and apply boolean blocking functions for author-mention record linkage"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    /// Affects wall-clock time only, never outputs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the run manifest here instead of next to the primary output.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus of author mentions.
    Datagen(DatagenArgs),
    /// Learn a blocking formula from labeled record pairs.
    Learn(LearnArgs),
    /// Apply a learned formula: build blocks and candidate pairs.
    Block(BlockArgs),
    /// Score a candidate-pair file against ground truth.
    Evaluate(EvaluateArgs),
    /// Sweep epsilon and emit a PC-RR curve as CSV.
    Curve(CurveArgs),
    /// Run a non-learned baseline (name heuristic or canopy clustering).
    Baseline(BaselineArgs),
}

#[derive(Debug, Args, Serialize)]
struct DatagenArgs {
    /// Output JSONL file (one mention per line, `truth_id` included).
    #[arg(long)]
    out: PathBuf,

    /// Generator parameters as a JSON file; flags below override fields.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Start from a named parameter preset instead of the defaults.
    #[arg(long, value_enum)]
    preset: Option<PresetFlag>,

    /// Number of distinct authors.
    #[arg(long)]
    authors: Option<usize>,

    /// Minimum mentions per author.
    #[arg(long)]
    mentions_min: Option<usize>,

    /// Maximum mentions per author.
    #[arg(long)]
    mentions_max: Option<usize>,

    /// Restrict names to this many (initial, surname) families.
    #[arg(long)]
    name_families: Option<usize>,

    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct LearnArgs {
    /// Input records.
    #[arg(long)]
    records: PathBuf,

    /// Input record layout.
    #[arg(long, value_enum, default_value_t = FormatFlag::Jsonl)]
    format: FormatFlag,

    /// Labeled pairs CSV (`left_id,right_id,label`). Without it, labels
    /// are derived from the records' `truth_id`.
    #[arg(long)]
    labels: Option<PathBuf>,

    /// Formula shape to learn.
    #[arg(long, value_enum)]
    form: FormFlag,

    /// Maximum predicates per conjunction term.
    #[arg(long, default_value_t = 3)]
    k: usize,

    /// Fraction of training positives the formula may sacrifice.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,

    /// Covering gain function.
    #[arg(long, value_enum, default_value_t = GainFlag::Info)]
    gain: GainFlag,

    /// Minimum p/P for the reduction-ratio gain (`--gain rr` only).
    #[arg(long, default_value_t = 0.9)]
    rr_threshold: f64,

    /// Predicate catalogue for the CNF/DNF body.
    #[arg(long, value_enum, default_value_t = PredFlag::Full)]
    predicates: PredFlag,

    /// Cap on accepted terms or clauses.
    #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
    max_terms: usize,

    /// Train on this fraction of the negative pairs.
    #[arg(long, default_value_t = 1.0)]
    negative_fraction: f64,

    /// Seed for negative subsampling (the only randomness in learning).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output formula file (text format).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BlockArgs {
    /// Learned formula file (text format).
    #[arg(long)]
    formula: PathBuf,

    /// Input records.
    #[arg(long)]
    records: PathBuf,

    /// Input record layout.
    #[arg(long, value_enum, default_value_t = FormatFlag::Jsonl)]
    format: FormatFlag,

    /// Write blocks as `key<TAB>id,id,...` lines. Only a disjoint-cnf
    /// formula partitions records into blocks.
    #[arg(long)]
    out_blocks: Option<PathBuf>,

    /// Write candidate pairs as `left_id,right_id` CSV.
    #[arg(long)]
    out_pairs: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    /// Input records.
    #[arg(long)]
    records: PathBuf,

    /// Input record layout.
    #[arg(long, value_enum, default_value_t = FormatFlag::Jsonl)]
    format: FormatFlag,

    /// Candidate pairs CSV to score.
    #[arg(long)]
    pairs: PathBuf,

    /// Labeled pairs CSV; must cover every candidate pair. Without it,
    /// labels are derived from the records' `truth_id`.
    #[arg(long)]
    labels: Option<PathBuf>,

    /// Blocks file (`key<TAB>id,id,...`); adds a block-size histogram.
    #[arg(long)]
    blocks: Option<PathBuf>,

    /// Also write the text report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CurveArgs {
    /// Input records.
    #[arg(long)]
    records: PathBuf,

    /// Input record layout.
    #[arg(long, value_enum, default_value_t = FormatFlag::Jsonl)]
    format: FormatFlag,

    /// Labeled pairs CSV. Without it, labels are derived from the
    /// records' `truth_id`.
    #[arg(long)]
    labels: Option<PathBuf>,

    /// Formula shape to sweep.
    #[arg(long, value_enum)]
    form: FormFlag,

    /// Maximum predicates per conjunction term.
    #[arg(long, default_value_t = 3)]
    k: usize,

    /// Covering gain function.
    #[arg(long, value_enum, default_value_t = GainFlag::Info)]
    gain: GainFlag,

    /// Minimum p/P for the reduction-ratio gain (`--gain rr` only).
    #[arg(long, default_value_t = 0.9)]
    rr_threshold: f64,

    /// Predicate catalogue for the CNF/DNF body.
    #[arg(long, value_enum, default_value_t = PredFlag::Full)]
    predicates: PredFlag,

    /// Cap on accepted terms or clauses.
    #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
    max_terms: usize,

    /// Comma-separated epsilon values in [0,1) (default: a grid
    /// densified near zero).
    #[arg(long)]
    epsilon_grid: Option<String>,

    /// Folds for the seeded split; the curve trains on the first fold's
    /// training half and scores its test half.
    #[arg(long, default_value_t = 2)]
    folds: usize,

    /// How the labeled pairs are dealt into folds.
    #[arg(long, value_enum, default_value_t = SplitFlag::Pairs)]
    split: SplitFlag,

    /// Split seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output CSV file (`epsilon,rr,pc,f`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BaselineArgs {
    /// Baseline method.
    #[arg(long, value_enum)]
    method: MethodFlag,

    /// Input records.
    #[arg(long)]
    records: PathBuf,

    /// Input record layout.
    #[arg(long, value_enum, default_value_t = FormatFlag::Jsonl)]
    format: FormatFlag,

    /// Canopy loose similarity floor (records this similar to the seed
    /// join its canopy).
    #[arg(long, default_value_t = 0.7)]
    loose: f64,

    /// Canopy tight similarity floor (records this similar stop seeding
    /// canopies of their own). Must be >= --loose.
    #[arg(long, default_value_t = 0.9)]
    tight: f64,

    /// Write candidate pairs as `left_id,right_id` CSV.
    #[arg(long)]
    out_pairs: Option<PathBuf>,

    /// Write blocks as `key<TAB>id,id,...` (heuristic only — canopies
    /// overlap and are not a partition).
    #[arg(long)]
    out_blocks: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PresetFlag {
    /// Library defaults.
    Default,
    /// A few crowded (initial, surname) families of confusable authors.
    Family,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FormFlag {
    Dnf,
    Cnf,
    DisjointCnf,
}

impl From<FormFlag> for FormKind {
    fn from(f: FormFlag) -> FormKind {
        match f {
            FormFlag::Dnf => FormKind::Dnf,
            FormFlag::Cnf => FormKind::Cnf,
            FormFlag::DisjointCnf => FormKind::DisjointCnf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GainFlag {
    /// Information gain.
    Info,
    /// Positive/negative coverage ratio.
    Ratio,
    /// Thresholded reduction ratio.
    Rr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PredFlag {
    /// Equality-style predicates only (hash-partitionable).
    Disjoint,
    /// The whole catalogue, including relative predicates.
    Full,
}

impl From<PredFlag> for PredicateFlavor {
    fn from(p: PredFlag) -> PredicateFlavor {
        match p {
            PredFlag::Disjoint => PredicateFlavor::Disjoint,
            PredFlag::Full => PredicateFlavor::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FormatFlag {
    Jsonl,
    Csv,
}

impl From<FormatFlag> for RecordFormat {
    fn from(f: FormatFlag) -> RecordFormat {
        match f {
            FormatFlag::Jsonl => RecordFormat::Jsonl,
            FormatFlag::Csv => RecordFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SplitFlag {
    Pairs,
    Records,
}

impl From<SplitFlag> for SplitMode {
    fn from(s: SplitFlag) -> SplitMode {
        match s {
            SplitFlag::Pairs => SplitMode::Pairs,
            SplitFlag::Records => SplitMode::Records,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodFlag {
    /// First-initial + exact-surname blocking.
    Heuristic,
    /// McCallum canopy clustering over name similarity.
    Canopy,
}

// ---------------------------------------------------------------------
// Error discipline: usage (exit 1) vs runtime (exit 2)
// ---------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    /// Bad arguments, detectable before touching any input data.
    Usage(String),
    /// Everything that goes wrong while doing the work.
    Runtime(String),
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

fn read_ctx(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write_ctx(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------

/// Parse `argv` and run. Returns the process exit code; errors go to
/// standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 1;
        }
        // Only wall-clock behaviour depends on the pool, so a pool that
        // already exists (e.g. a second in-process run) is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let manifest = cli.manifest.as_deref();
    let outcome = match &cli.command {
        Command::Datagen(a) => run_datagen(a, manifest),
        Command::Learn(a) => run_learn(a, manifest),
        Command::Block(a) => run_block(a, manifest),
        Command::Evaluate(a) => run_evaluate(a, manifest),
        Command::Curve(a) => run_curve(a, manifest),
        Command::Baseline(a) => run_baseline(a, manifest),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

// ---------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------

/// Echo a run into its manifest: tool, resolved arguments, output paths.
fn write_run_manifest(
    explicit: Option<&Path>,
    primary_out: Option<&Path>,
    command: &str,
    args: &impl Serialize,
    outputs: &[&Path],
) -> CliResult {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => match primary_out {
            Some(p) => {
                let mut s = p.as_os_str().to_os_string();
                s.push(".manifest.json");
                PathBuf::from(s)
            }
            // Nothing written, nowhere natural to put it: skip.
            None => return Ok(()),
        },
    };
    let body = serde_json::json!({
        "tool": "blocklearn",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "args": args,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&body)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_ctx(&path, &text)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Add the file name to errors crossing the CLI boundary, so "no such
/// file" names the file.
fn in_file<T>(path: &Path, r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn load_input_records(path: &Path, format: FormatFlag) -> CliResult<RecordSet> {
    in_file(path, load_records(path, format.into()))
}

/// Labels from an explicit file, or from `truth_id` agreement.
fn resolve_labels(
    records: &RecordSet,
    labels: Option<&Path>,
) -> CliResult<LabeledPairSet> {
    match labels {
        Some(p) => in_file(p, load_labeled_pairs(p, records)),
        None => Ok(labels_from_truth(records, "truth_id")?),
    }
}

fn gain_from_flags(gain: GainFlag, rr_threshold: f64) -> CliResult<GainKind> {
    match gain {
        GainFlag::Info => Ok(GainKind::InfoGain),
        GainFlag::Ratio => Ok(GainKind::PosNegRatio),
        GainFlag::Rr => GainKind::reduction_ratio(rr_threshold)
            .map_err(|e| usage(e.to_string())),
    }
}

fn learner_config(
    k: usize,
    epsilon: f64,
    gain: GainFlag,
    rr_threshold: f64,
    max_terms: usize,
) -> CliResult<LearnerConfig> {
    let cfg = LearnerConfig {
        k,
        epsilon,
        gain: gain_from_flags(gain, rr_threshold)?,
        max_terms,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn parse_epsilon_grid(spec: Option<&str>) -> CliResult<Vec<f64>> {
    let Some(spec) = spec else {
        return Ok(DEFAULT_EPSILON_GRID.to_vec());
    };
    let mut grid = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let eps: f64 = part
            .parse()
            .map_err(|_| usage(format!("bad epsilon value `{part}` in --epsilon-grid")))?;
        if !(0.0..1.0).contains(&eps) {
            return Err(usage(format!(
                "epsilon values must lie in [0,1), got {eps}"
            )));
        }
        grid.push(eps);
    }
    if grid.is_empty() {
        return Err(usage("--epsilon-grid is empty"));
    }
    Ok(grid)
}

fn render_counters(c: &BlockCounters) -> String {
    format!(
        "pairs: {} generated, {} kept, {} filtered\n\
         predicate evals: {} ({:.2} per kept pair, {:.2} per filtered pair)\n",
        c.pairs_generated,
        c.pairs_kept,
        c.pairs_filtered,
        c.predicate_evals(),
        c.mean_evals_per_kept(),
        c.mean_evals_per_filtered(),
    )
}

// ---------------------------------------------------------------------
// datagen
// ---------------------------------------------------------------------

fn run_datagen(a: &DatagenArgs, manifest: Option<&Path>) -> CliResult {
    let mut params = match (&a.config, a.preset) {
        (Some(path), _) => {
            let raw = read_ctx(path)?;
            serde_json::from_str::<GenParams>(&raw).map_err(|e| {
                CliError::Runtime(format!("{}: {e}", path.display()))
            })?
        }
        (None, Some(PresetFlag::Family)) => GenParams::family_preset(a.seed.unwrap_or(0)),
        (None, Some(PresetFlag::Default)) | (None, None) => GenParams::default(),
    };
    if let Some(v) = a.authors {
        params.authors = v;
    }
    if let Some(v) = a.mentions_min {
        params.mentions_min = v;
    }
    if let Some(v) = a.mentions_max {
        params.mentions_max = v;
    }
    if let Some(v) = a.name_families {
        params.name_families = Some(v);
    }
    if let Some(v) = a.seed {
        params.seed = v;
    }

    let records = generate(&params).map_err(|e| match e {
        // The resolved parameters came straight from flags/preset/config,
        // so rejection is the caller's mistake, not a runtime failure.
        crate::Error::InvalidConfig(msg) => usage(msg),
        e => e.into(),
    })?;
    records.write_jsonl(&a.out)?;

    println!(
        "generated {} mentions for {} authors (seed {}) -> {}",
        records.len(),
        params.authors,
        params.seed,
        a.out.display()
    );
    print!("{}", records.stats().render());

    // Record the *resolved* parameters, not just the sparse flags: the
    // manifest alone must be able to regenerate the corpus.
    #[derive(Serialize)]
    struct DatagenManifest<'a> {
        #[serde(flatten)]
        args: &'a DatagenArgs,
        resolved_params: &'a GenParams,
    }
    write_run_manifest(
        manifest,
        Some(&a.out),
        "datagen",
        &DatagenManifest { args: a, resolved_params: &params },
        &[&a.out],
    )
}

// ---------------------------------------------------------------------
// learn
// ---------------------------------------------------------------------

fn run_learn(a: &LearnArgs, manifest: Option<&Path>) -> CliResult {
    let cfg = learner_config(a.k, a.epsilon, a.gain, a.rr_threshold, a.max_terms)?;
    if !(0.0..=1.0).contains(&a.negative_fraction) {
        return Err(usage(format!(
            "--negative-fraction must lie in [0,1], got {}",
            a.negative_fraction
        )));
    }

    let records = load_input_records(&a.records, a.format)?;
    let mut labels = resolve_labels(&records, a.labels.as_deref())?;
    if a.negative_fraction < 1.0 {
        labels = labels.subsample_negatives(a.negative_fraction, a.seed);
    }
    let tfidf = TfidfModel::build(&records);

    let preds = generate_predicate_set(a.predicates.into());
    let cov = CoverageMatrix::build(&records, &labels, &preds, Some(&tfidf))?;
    let formula = match a.form {
        FormFlag::Dnf => BlockingFormula::Dnf(learn_dnf(&cov, &preds, &cfg)?),
        FormFlag::Cnf => BlockingFormula::Cnf(learn_cnf(&cov, &preds, &cfg)?),
        FormFlag::DisjointCnf => {
            let pd = generate_predicate_set(PredicateFlavor::Disjoint);
            let cov_d = CoverageMatrix::build(&records, &labels, &pd, Some(&tfidf))?;
            // Split the sacrifice budget evenly between the partition
            // stage and the refining CNF.
            let half = cfg.epsilon / 2.0;
            BlockingFormula::DisjointCnf(learn_disjoint_cnf(
                &cov_d, &cov, &pd, &preds, &cfg, half, half,
            )?)
        }
    };

    let mut text = formula.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    write_ctx(&a.out, &text)?;

    let (p, n) = crate::evaluation::formula_counts(&formula, &cov, &preds)?;
    let train = metrics_from_counts(
        labels.positives().len() as u64,
        labels.negatives().len() as u64,
        p,
        n,
    )?;
    println!(
        "learned {} ({} predicate slots) -> {}",
        match a.form {
            FormFlag::Dnf => "DNF",
            FormFlag::Cnf => "CNF",
            FormFlag::DisjointCnf => "disjoint CNF",
        },
        formula.size(),
        a.out.display()
    );
    print!("{text}");
    println!("training metrics:");
    print!("{}", train.render());

    write_run_manifest(manifest, Some(&a.out), "learn", a, &[&a.out])
}

// ---------------------------------------------------------------------
// block
// ---------------------------------------------------------------------

fn run_block(a: &BlockArgs, manifest: Option<&Path>) -> CliResult {
    let records = load_input_records(&a.records, a.format)?;
    let formula = in_file(&a.formula, parse_formula(&read_ctx(&a.formula)?))?;
    let tfidf = TfidfModel::build(&records);

    let result = match &formula {
        BlockingFormula::DisjointCnf(d) => {
            let blocks = apply_conjunction_blocks(&d.stage1, &records)?;
            if let Some(out) = &a.out_blocks {
                write_ctx(out, &render_blocks(&blocks, &records))?;
                println!("wrote {} blocks -> {}", blocks.len(), out.display());
            }
            filter_pairs(&blocks, &records, &d.refine, Some(&tfidf))?
        }
        _ => {
            if a.out_blocks.is_some() {
                return Err(CliError::Runtime(
                    "this formula is not disjoint-cnf: it does not partition \
                     records into blocks, so --out-blocks is unavailable"
                        .into(),
                ));
            }
            candidate_pairs_nondisjoint(&records, &formula, Some(&tfidf))?
        }
    };

    write_pairs_csv(&a.out_pairs, &result.pairs, &records)?;
    println!(
        "wrote {} candidate pairs -> {}",
        result.pairs.len(),
        a.out_pairs.display()
    );
    print!("{}", render_counters(&result.counters));

    let mut outputs: Vec<&Path> = vec![&a.out_pairs];
    if let Some(b) = &a.out_blocks {
        outputs.push(b);
    }
    write_run_manifest(manifest, Some(&a.out_pairs), "block", a, &outputs)
}

// ---------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------

/// Block sizes from a `key<TAB>id,id,...` file.
fn block_sizes_from_file(path: &Path) -> CliResult<Vec<u64>> {
    let raw = read_ctx(path)?;
    let mut sizes = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let Some((_, ids)) = line.split_once('\t') else {
            return Err(CliError::Runtime(format!(
                "{}:{}: expected `key<TAB>id,id,...`",
                path.display(),
                lineno + 1
            )));
        };
        sizes.push(ids.split(',').filter(|s| !s.is_empty()).count() as u64);
    }
    Ok(sizes)
}

fn run_evaluate(a: &EvaluateArgs, manifest: Option<&Path>) -> CliResult {
    let records = load_input_records(&a.records, a.format)?;
    let labels = resolve_labels(&records, a.labels.as_deref())?;
    let pairs = in_file(&a.pairs, load_pairs_csv(&a.pairs, &records))?;
    let metrics = compute_metrics(&pairs, &labels)?;

    let mut report = metrics.render();
    if let Some(blocks) = &a.blocks {
        let sizes = block_sizes_from_file(blocks)?;
        let hist = block_size_histogram(&sizes, &DEFAULT_HIST_BOUNDS);
        let _ = write!(report, "\n{}", hist.render());
    }
    print!("{report}");
    if let Some(out) = &a.out {
        write_ctx(out, &report)?;
        println!("wrote {}", out.display());
    }

    let outputs: Vec<&Path> = a.out.iter().map(PathBuf::as_path).collect();
    write_run_manifest(manifest, a.out.as_deref(), "evaluate", a, &outputs)
}

// ---------------------------------------------------------------------
// curve
// ---------------------------------------------------------------------

fn run_curve(a: &CurveArgs, manifest: Option<&Path>) -> CliResult {
    let cfg = learner_config(a.k, 0.01, a.gain, a.rr_threshold, a.max_terms)?;
    let grid = parse_epsilon_grid(a.epsilon_grid.as_deref())?;
    if a.folds < 2 {
        return Err(usage("--folds must be at least 2"));
    }

    let records = load_input_records(&a.records, a.format)?;
    let labels = resolve_labels(&records, a.labels.as_deref())?;
    let tfidf = TfidfModel::build(&records);

    let cv = CvConfig {
        folds: a.folds,
        seed: a.seed,
        mode: a.split.into(),
    };
    let splits = cv_splits(&records, &labels, &cv)?;
    let (train, test) = &splits[0];

    let preds = generate_predicate_set(a.predicates.into());
    let preds_disjoint: Option<PredicateSet> = match a.form {
        FormFlag::DisjointCnf => Some(generate_predicate_set(PredicateFlavor::Disjoint)),
        _ => None,
    };
    let fold = FoldEval::build(
        &records,
        train,
        test,
        &preds,
        preds_disjoint.as_ref(),
        Some(&tfidf),
    )?;
    let points = pc_rr_curve(&fold, a.form.into(), &cfg, &grid)?;

    let csv = curve_csv(&points);
    write_ctx(&a.out, &csv)?;
    print!("{csv}");
    println!("wrote {} curve points -> {}", points.len(), a.out.display());

    write_run_manifest(manifest, Some(&a.out), "curve", a, &[&a.out])
}

// ---------------------------------------------------------------------
// baseline
// ---------------------------------------------------------------------

fn run_baseline(a: &BaselineArgs, manifest: Option<&Path>) -> CliResult {
    let records = load_input_records(&a.records, a.format)?;

    let (result, blocks) = match a.method {
        MethodFlag::Heuristic => {
            let blocks = heuristic_blocks(&records);
            // An empty refinement keeps every within-block pair.
            let all = crate::formula::CnfFormula::empty();
            let result = filter_pairs(&blocks, &records, &all, None)?;
            (result, Some(blocks))
        }
        MethodFlag::Canopy => {
            if a.out_blocks.is_some() {
                return Err(usage(
                    "canopies overlap; --out-blocks is only available with \
                     --method heuristic",
                ));
            }
            (canopy_pairs(&records, a.loose, a.tight)?, None)
        }
    };

    if let Some(blocks) = &blocks {
        let hist = block_size_histogram(&block_sizes(blocks), &DEFAULT_HIST_BOUNDS);
        print!("{}", hist.render());
        if let Some(out) = &a.out_blocks {
            write_ctx(out, &render_blocks(blocks, &records))?;
            println!("wrote {} blocks -> {}", blocks.len(), out.display());
        }
    }
    if let Some(out) = &a.out_pairs {
        write_pairs_csv(out, &result.pairs, &records)?;
        println!(
            "wrote {} candidate pairs -> {}",
            result.pairs.len(),
            out.display()
        );
    }
    print!("{}", render_counters(&result.counters));

    // Score against ground truth when the corpus carries it.
    if records.records().iter().all(|r| r.truth_id.is_some()) {
        let labels = labels_from_truth(&records, "truth_id")?;
        let metrics = compute_metrics(&result.pairs, &labels)?;
        print!("{}", metrics.render());
    } else {
        println!("(no ground truth on records; metrics skipped)");
    }

    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(p) = &a.out_pairs {
        outputs.push(p);
    }
    if let Some(b) = &a.out_blocks {
        outputs.push(b);
    }
    write_run_manifest(manifest, a.out_pairs.as_deref(), "baseline", a, &outputs)
}

// ---------------------------------------------------------------------
