//! `lbf`: corpus ingestion, classifier training, filter building, querying,
//! and benchmark sweeps over learned Bloom filter configurations.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 budget-constraint
//! violation.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lbf_core::bloom::BloomFilter;
use lbf_core::classifiers::{
    encode_model, encoding_mode_for, train, Activation, ClassifierKind, TrainingConfig,
};
use lbf_core::dataset::{standardize, Corpus};
use lbf_core::features::{encode_all, CharVocabulary, FrequencyMode};
use lbf_core::harness::{
    self, holdout_split, run_filter_sweep, screen_classifiers, ScreeningConfig, SweepConfig,
};
use lbf_core::learned::{
    calibrate_tau_from_scores, lbf_build, slbf_build, BudgetError, KeyScorer, LearnedFilter,
};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "lbf", version, about = "Learned Bloom filter benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TrainOpts {
    /// RNG seed; every random choice flows from it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Character frequency mode: relative|absolute.
    #[arg(long, default_value = "relative")]
    freq: String,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    /// NB smoothing / LR L2 strength / SVM C.
    #[arg(long, default_value_t = 1e-4)]
    reg: f64,
    /// FFNN hidden activation: relu|tanh.
    #[arg(long, default_value = "relu")]
    activation: String,
}

impl TrainOpts {
    fn config(&self, hidden: usize) -> Result<TrainingConfig, AppError> {
        let activation = match self.activation.as_str() {
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            other => return Err(AppError::Usage(format!("unknown activation {other:?}"))),
        };
        Ok(TrainingConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            reg: self.reg,
            hidden,
            activation,
        })
    }

    fn mode(&self) -> Result<FrequencyMode, AppError> {
        self.freq
            .parse::<FrequencyMode>()
            .map_err(|e| AppError::Usage(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Standardize and dedupe a `url,label` CSV into the corpus cache.
    Ingest {
        /// Input CSV with a `url,label` header row.
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory; the cache is written as `corpus.lbd`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one classifier on the filter protocol's training split and
    /// report 5-fold cross-validation metrics.
    Train {
        /// Ingested corpus cache (`corpus.lbd`).
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Classifier kind: nb|lr|svm|ffnn.
        #[arg(long)]
        classifier: String,
        /// FFNN hidden width.
        #[arg(long, default_value_t = 20)]
        hidden: usize,
        #[command(flatten)]
        train: TrainOpts,
    },
    /// Build a filter file from the corpus (and a model, for learned
    /// variants).
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Filter variant: classic|lbf|slbf.
        #[arg(long)]
        variant: String,
        /// Trained model blob; required for lbf and slbf.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Target overall false positive rate.
        #[arg(long)]
        epsilon: f64,
        /// Classifier budget: the epsilon_tau target the threshold is
        /// calibrated to (learned variants only).
        #[arg(long)]
        epsilon_tau: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Query a filter file; prints one accept/reject line per key.
    Query {
        /// Filter blob produced by `build`.
        #[arg(long)]
        filter: PathBuf,
        /// Single key to query (standardized like ingestion).
        #[arg(long)]
        key: Option<String>,
        /// File of keys, one per line; streamed, not loaded whole.
        #[arg(long)]
        keys: Option<PathBuf>,
    },
    /// Full benchmark grid: classic baseline plus learned variants over
    /// epsilon x ratio x classifier; writes sweep.json and sweep.csv.
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overall FPR targets; repeatable.
        #[arg(long = "epsilon", value_name = "EPSILON")]
        epsilons: Vec<f64>,
        /// epsilon_tau/epsilon for LBF rows, epsilon_tau itself for SLBF
        /// rows; repeatable. Empty list gives a baseline-only report.
        #[arg(long = "ratio", value_name = "RATIO")]
        ratios: Vec<f64>,
        /// Classifier kinds to sweep; repeatable; default all four.
        #[arg(long = "classifier", value_name = "KIND")]
        classifiers: Vec<String>,
        /// Learned variants to sweep: lbf|slbf; repeatable; default both.
        #[arg(long = "variant", value_name = "VARIANT")]
        variants: Vec<String>,
        /// FFNN hidden widths; repeatable; default 10 15 20 25 30.
        #[arg(long = "hidden", value_name = "WIDTH")]
        hidden: Vec<usize>,
        /// Skip reject-time measurement (timing columns become 0); wall-clock
        /// numbers are the one non-deterministic part of a sweep report.
        #[arg(long)]
        no_timing: bool,
        #[command(flatten)]
        train: TrainOpts,
    },
}

#[derive(Debug)]
enum AppError {
    Usage(String),
    Data(String),
    Constraint(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data(_) => 2,
            AppError::Constraint(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Data(m) | AppError::Constraint(m) => m,
        }
    }
}

impl From<lbf_core::dataset::DataError> for AppError {
    fn from(e: lbf_core::dataset::DataError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<lbf_core::bloom::BloomError> for AppError {
    fn from(e: lbf_core::bloom::BloomError) -> Self {
        AppError::Constraint(e.to_string())
    }
}

impl From<BudgetError> for AppError {
    fn from(e: BudgetError) -> Self {
        AppError::Constraint(e.to_string())
    }
}

impl From<harness::HarnessError> for AppError {
    fn from(e: harness::HarnessError) -> Self {
        match e {
            harness::HarnessError::Budget(b) => AppError::Constraint(b.to_string()),
            other => AppError::Data(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successes, everything else is usage
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Ingest { corpus, out } => cmd_ingest(&corpus, &out),
        Command::Train { corpus, out, classifier, hidden, train } => {
            cmd_train(&corpus, &out, &classifier, hidden, &train)
        }
        Command::Build { corpus, out, variant, model, epsilon, epsilon_tau, seed } => {
            cmd_build(&corpus, &out, &variant, model.as_deref(), epsilon, epsilon_tau, seed)
        }
        Command::Query { filter, key, keys } => cmd_query(&filter, key.as_deref(), keys.as_deref()),
        Command::Sweep {
            corpus,
            out,
            epsilons,
            ratios,
            classifiers,
            variants,
            hidden,
            no_timing,
            train,
        } => cmd_sweep(
            &corpus, &out, epsilons, ratios, classifiers, variants, hidden, no_timing, &train,
        ),
    }
}

fn cmd_ingest(csv_path: &Path, out: &Path) -> Result<(), AppError> {
    let corpus = Corpus::from_csv_path(csv_path)?;
    std::fs::create_dir_all(out)?;
    let cache = out.join("corpus.lbd");
    std::fs::write(&cache, corpus.encode())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&corpus.summary).expect("summary serializes")
    );
    Ok(())
}

fn parse_kind(s: &str) -> Result<ClassifierKind, AppError> {
    s.parse::<ClassifierKind>().map_err(AppError::Usage)
}

fn cmd_train(
    corpus_path: &Path,
    out: &Path,
    classifier: &str,
    hidden: usize,
    opts: &TrainOpts,
) -> Result<(), AppError> {
    let kind = parse_kind(classifier)?;
    let config = opts.config(hidden)?;
    let mode = opts.mode()?;
    let corpus = Corpus::load(corpus_path)?;

    // Table-1-shaped screening row for this kind at this configuration.
    let screening = ScreeningConfig { folds: 5, seed: opts.seed, mode };
    let metrics = screen_classifiers(&corpus.records, &[(kind, vec![config])], &screening)?;

    // The deployable model trains on keys plus the training half of the
    // negatives, mirroring the filter protocol.
    let split = holdout_split(&corpus.records, opts.seed)?;
    let mut training = split.keys.clone();
    training.extend(split.train_negatives.iter().cloned());
    let vocab = CharVocabulary::build(&training)
        .map_err(|e| AppError::Data(e.to_string()))?;
    let mode = encoding_mode_for(kind, mode);
    let xs = encode_all(&training, &vocab, mode);
    let ys: Vec<i8> = training.iter().map(|r| r.label).collect();
    let model = train(kind, &xs, &ys, &config)
        .map_err(|e| AppError::Data(format!("{}: {e}", kind.name())))?;

    std::fs::create_dir_all(out)?;
    let model_path = out.join(format!("{}.lbm", kind.name()));
    std::fs::write(&model_path, encode_model(&model, &vocab, mode))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&metrics[0]).expect("metrics serialize")
    );
    Ok(())
}

fn cmd_build(
    corpus_path: &Path,
    out: &Path,
    variant: &str,
    model: Option<&Path>,
    epsilon: f64,
    epsilon_tau: Option<f64>,
    seed: u64,
) -> Result<(), AppError> {
    let corpus = Corpus::load(corpus_path)?;
    std::fs::create_dir_all(out)?;
    match variant {
        "classic" => {
            let keys: Vec<&[u8]> =
                corpus.records.iter().filter(|r| r.is_key()).map(|r| r.key_bytes()).collect();
            let filter = BloomFilter::build(&keys, epsilon, seed)?;
            let path = out.join("filter.lbf");
            std::fs::write(&path, filter.encode(lbf_core::bloom::LayerTag::Classic))?;
            println!(
                "{}",
                serde_json::json!({
                    "variant": "classic",
                    "payload_bytes": filter.payload_bytes(),
                    "total_bytes": filter.serialized_bytes(),
                    "m_bits": filter.m_bits(),
                    "k": filter.k(),
                })
            );
            Ok(())
        }
        "lbf" | "slbf" => {
            let model_path = model.ok_or_else(|| {
                AppError::Usage("learned variants require --model".to_string())
            })?;
            let target_eps_tau = epsilon_tau.ok_or_else(|| {
                AppError::Usage("learned variants require --epsilon-tau".to_string())
            })?;
            let blob = std::fs::read(model_path)?;
            let (model, vocab, mode) = lbf_core::classifiers::decode_model(&blob)
                .map_err(|e| AppError::Data(e.to_string()))?;
            let scorer = KeyScorer::new(model, vocab, mode);
            let split = holdout_split(&corpus.records, seed)?;
            let negatives: Vec<&[u8]> =
                split.train_negatives.iter().map(|r| r.key_bytes()).collect();
            let scores: Vec<f64> =
                negatives.iter().map(|k| scorer.score_key(k)).collect();
            let calibration = calibrate_tau_from_scores(&scores, target_eps_tau)?;
            let keys: Vec<&[u8]> = split.keys.iter().map(|r| r.key_bytes()).collect();
            let filter = if variant == "lbf" {
                lbf_build(&keys, scorer, calibration.tau, epsilon, &negatives, seed)?
            } else {
                slbf_build(&keys, scorer, calibration.tau, epsilon, &negatives, seed)?
            };
            let path = out.join("filter.lbc");
            std::fs::write(&path, filter.encode())?;
            let size = filter.size_bytes();
            println!(
                "{}",
                serde_json::json!({
                    "variant": variant,
                    "tau": filter.tau,
                    "budget": filter.budget,
                    "model_bytes": size.model_bytes,
                    "initial_bytes": size.initial_bytes,
                    "backup_bytes": size.backup_bytes,
                    "total_bytes": size.total_bytes,
                })
            );
            Ok(())
        }
        other => Err(AppError::Usage(format!("unknown variant {other:?}"))),
    }
}

enum AnyFilter {
    Classic(BloomFilter),
    Learned(Box<LearnedFilter>),
}

impl AnyFilter {
    fn query(&self, key: &[u8]) -> bool {
        match self {
            AnyFilter::Classic(f) => f.query(key),
            AnyFilter::Learned(f) => f.query(key),
        }
    }
}

fn load_filter(path: &Path) -> Result<AnyFilter, AppError> {
    let bytes = std::fs::read(path)?;
    let corrupt = |e: lbf_core::codec::CodecError| AppError::Data(format!("corrupt filter: {e}"));
    match bytes.get(..4) {
        Some(b"LBF1") => {
            let (f, _) = BloomFilter::decode(&bytes).map_err(corrupt)?;
            Ok(AnyFilter::Classic(f))
        }
        Some(b"LBC1") => Ok(AnyFilter::Learned(Box::new(
            LearnedFilter::decode(&bytes).map_err(corrupt)?,
        ))),
        _ => Err(AppError::Data("corrupt filter: unrecognized magic".to_string())),
    }
}

fn cmd_query(
    filter_path: &Path,
    key: Option<&str>,
    keys: Option<&Path>,
) -> Result<(), AppError> {
    let filter = load_filter(filter_path)?;
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let mut verdict = |raw: &str| -> Result<(), AppError> {
        let canonical = standardize(raw);
        let line = if filter.query(canonical.as_bytes()) { "accept" } else { "reject" };
        writeln!(out, "{line}")?;
        Ok(())
    };
    match (key, keys) {
        (Some(k), None) => verdict(k)?,
        (None, Some(path)) => {
            let reader = std::io::BufReader::new(std::fs::File::open(path)?);
            for line in reader.lines() {
                verdict(&line?)?;
            }
        }
        _ => {
            return Err(AppError::Usage(
                "provide exactly one of --key or --keys".to_string(),
            ))
        }
    }
    out.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    corpus_path: &Path,
    out: &Path,
    epsilons: Vec<f64>,
    ratios: Vec<f64>,
    classifiers: Vec<String>,
    variants: Vec<String>,
    hidden: Vec<usize>,
    no_timing: bool,
    opts: &TrainOpts,
) -> Result<(), AppError> {
    let corpus = Corpus::load(corpus_path)?;
    let kinds = if classifiers.is_empty() {
        ClassifierKind::ALL.to_vec()
    } else {
        classifiers.iter().map(|s| parse_kind(s)).collect::<Result<Vec<_>, _>>()?
    };
    let variants = if variants.is_empty() {
        vec![lbf_core::learned::Variant::Lbf, lbf_core::learned::Variant::Slbf]
    } else {
        variants
            .iter()
            .map(|v| match v.as_str() {
                "lbf" => Ok(lbf_core::learned::Variant::Lbf),
                "slbf" => Ok(lbf_core::learned::Variant::Slbf),
                other => Err(AppError::Usage(format!("unknown sweep variant {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let defaults = SweepConfig::default();
    let config = SweepConfig {
        epsilons: if epsilons.is_empty() { defaults.epsilons } else { epsilons },
        ratios,
        kinds,
        variants,
        train: opts.config(20)?,
        hidden_widths: if hidden.is_empty() { defaults.hidden_widths } else { hidden },
        mode: opts.mode()?,
        seed: opts.seed,
        timing_repetitions: defaults.timing_repetitions,
        measure_time: !no_timing,
    };
    let points = run_filter_sweep(&corpus.records, &config)?;
    std::fs::create_dir_all(out)?;
    let json = out.join("sweep.json");
    let csv = out.join("sweep.csv");
    harness::report::write_sweep_json(&json, config.seed, corpus.records.len(), &points)
        .map_err(|e| AppError::Data(e.to_string()))?;
    harness::report::write_sweep_csv(&csv, &points)
        .map_err(|e| AppError::Data(e.to_string()))?;
    let skipped = points.iter().filter(|p| p.skipped_reason.is_some()).count();
    println!(
        "{}",
        serde_json::json!({
            "points": points.len(),
            "skipped": skipped,
            "json": json.display().to_string(),
            "csv": csv.display().to_string(),
        })
    );
    Ok(())
}
