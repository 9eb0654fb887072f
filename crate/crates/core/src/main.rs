use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use claimcheck::corpus::{
    article_label_distribution, fixture_corpus, ingest_with_format, label_distribution,
    normalize_articles, Article, Dataset, LabelDistribution, RecordFormat,
};
use claimcheck::pipeline::{
    examples_from_records, read_records, run_gist_experiment, Config, InputMode, PipelineRecord,
    PipelineVariant, ProviderKind, DEFAULT_GIST_SAMPLE,
};
use claimcheck::summarize::SummarizerBackend;
use claimcheck::veracity::{evaluate, split_dataset, train, HashedLinearClassifier, ModelSnapshot};

#[derive(Parser)]
#[command(name = "claimcheck", version, about = "Claim detection, evidence gathering and veracity prediction")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for splits, shuffling and sampling; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Search provider; overrides the config.
    #[arg(long, global = true, value_enum)]
    provider: Option<ProviderArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Live,
    Fixture,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    P1,
    P2,
    P3,
}

impl From<PipelineArg> for PipelineVariant {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::P1 => PipelineVariant::P1Headline,
            PipelineArg::P2 => PipelineVariant::P2Summary,
            PipelineArg::P3 => PipelineVariant::P3HeadlinePlusSummary,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Concat,
    Content,
}

impl From<ModeArg> for InputMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Concat => InputMode::Concat,
            ModeArg::Content => InputMode::Content,
        }
    }
}

#[derive(clap::Args)]
struct CorpusArgs {
    /// Corpus file (csv, tsv or jsonl), or `fixture` for the bundled corpus.
    #[arg(long)]
    corpus: String,
    /// Source dataset of the corpus file.
    #[arg(long, default_value = "snopes")]
    dataset: String,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Read and normalize a corpus; writes one article per line.
    Ingest(CorpusArgs),
    /// ROUGE of headline and summaries against reference claims.
    GistEval {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = DEFAULT_GIST_SAMPLE)]
        sample: usize,
    },
    /// Run one pipeline variant and write its records.
    Run {
        #[arg(long, value_enum)]
        pipeline: PipelineArg,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Train the veracity classifier from records.
    Train {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value = "concat")]
        mode: ModeArg,
    },
    /// Evaluate a trained model on the test split of a records file.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        records: PathBuf,
    },
    /// Label distribution of a records file or a corpus.
    Stats {
        #[arg(long, conflicts_with = "corpus")]
        records: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<String>,
        #[arg(long, default_value = "snopes")]
        dataset: String,
    },
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(p) = cli.provider {
        cfg.provider.kind = match p {
            ProviderArg::Live => ProviderKind::Live,
            ProviderArg::Fixture => ProviderKind::Fixture,
        };
    }
    Ok(cfg)
}

fn load_corpus(cfg: &Config, corpus: &str, dataset: &str, format: Option<&str>) -> Result<Vec<Article>> {
    if corpus == "fixture" {
        return Ok(fixture_corpus()?);
    }
    let path = Path::new(corpus);
    let dataset: Dataset = dataset.parse()?;
    let format = match format {
        Some(f) => f.parse()?,
        None => RecordFormat::from_path(path),
    };
    let ingested = ingest_with_format(path, format, dataset)?;
    if ingested.malformed > 0 || ingested.dropped_empty > 0 {
        log::warn!(
            "{}: {} malformed and {} empty rows skipped",
            path.display(),
            ingested.malformed,
            ingested.dropped_empty
        );
    }
    let labeled = normalize_articles(ingested.articles, &cfg.label_map()?)?;
    if labeled.dropped_by_label > 0 {
        log::info!("{} articles dropped by the label map", labeled.dropped_by_label);
    }
    Ok(labeled.articles)
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn load_records(path: &Path) -> Result<Vec<PipelineRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_records(BufReader::new(file))?)
}

fn distribution_table(dist: &LabelDistribution, extra: &[(&str, usize)]) -> String {
    let mut out = format!("{:<14}{:>8}\n", "label", "count");
    for (label, n) in dist {
        out.push_str(&format!("{:<14}{:>8}\n", label.as_str(), n));
    }
    for (name, n) in extra {
        out.push_str(&format!("{name:<14}{n:>8}\n"));
    }
    out.push_str(&format!("{:<14}{:>8}\n", "total", dist.values().sum::<usize>()));
    out
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Ingest(c) => {
            let articles = load_corpus(&cfg, &c.corpus, &c.dataset, c.format.as_deref())?;
            let mut out = output(&cli.out)?;
            for a in &articles {
                serde_json::to_writer(&mut out, a)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
            eprint!("{}", distribution_table(&article_label_distribution(&articles)?, &[]));
        }
        Command::GistEval { corpus: c, sample } => {
            let articles = load_corpus(&cfg, &c.corpus, &c.dataset, c.format.as_deref())?;
            let summarizer = cfg.summarizer()?;
            let backends: Vec<&dyn SummarizerBackend> = vec![summarizer.as_ref()];
            let report = run_gist_experiment(&articles, &backends, *sample, cfg.seed)?;
            print!("{}", report.to_table());
            if let Some(p) = &cli.out {
                std::fs::write(p, serde_json::to_string_pretty(&report)?)?;
            }
        }
        Command::Run { pipeline, corpus: c } => {
            let variant = PipelineVariant::from(*pipeline);
            let articles = load_corpus(&cfg, &c.corpus, &c.dataset, c.format.as_deref())?;
            let p = cfg.build_pipeline(cfg.provider.kind, variant.needs_summary())?;
            let path = cli
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("records-{}.jsonl", variant.short_name())));
            let mut out = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
            let summary = p.run_to_writer(&articles, variant, &mut out)?;
            eprintln!(
                "{}: {} records ({} failed, {} NEI) written to {}",
                variant.short_name(),
                summary.total,
                summary.failed,
                summary.nei,
                path.display()
            );
        }
        Command::Train { records, mode } => {
            let mode = InputMode::from(*mode);
            let examples = examples_from_records(&load_records(records)?, mode)?;
            let tc = cfg.train_config();
            let split = split_dataset(examples, &tc)?;
            let mut model = HashedLinearClassifier::new(cfg.classifier.dimension, cfg.classifier.hash_seed);
            let log = train(&mut model, &split.train, &split.validation, &tc)?;
            for e in &log.epochs {
                eprintln!(
                    "epoch {}: loss {:.4} train LA {:.4} val LA {}",
                    e.epoch,
                    e.train_loss,
                    e.train_accuracy,
                    e.validation_accuracy.map_or("-".into(), |v| format!("{v:.4}"))
                );
            }
            let report = evaluate(&model, &split.test)?;
            print!("{}", report.to_table());

            let mut snapshot = model.to_snapshot();
            let meta = BTreeMap::from([
                ("input_mode".to_string(), serde_json::to_value(mode)?.as_str().unwrap_or_default().to_string()),
                ("split_seed".to_string(), tc.seed.to_string()),
                ("train_ratio".to_string(), tc.train_ratio.to_string()),
                ("validation_ratio".to_string(), tc.validation_ratio.to_string()),
                ("test_ratio".to_string(), tc.test_ratio.to_string()),
                ("epochs".to_string(), tc.epochs.to_string()),
                ("best_epoch".to_string(), log.best_epoch.to_string()),
            ]);
            snapshot.metadata = meta;
            let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("model.json"));
            std::fs::write(&path, serde_json::to_string(&snapshot)?)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("model written to {}", path.display());
        }
        Command::Evaluate { model, records } => {
            let text = std::fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
            let snapshot: ModelSnapshot = serde_json::from_str(&text).context("parsing model snapshot")?;
            let classifier = HashedLinearClassifier::from_snapshot(&snapshot)?;
            let meta = |k: &str| snapshot.metadata.get(k).cloned();
            let mode: InputMode = meta("input_mode").as_deref().unwrap_or("concat").parse()?;
            let mut tc = cfg.train_config();
            if cli.seed.is_none() {
                if let Some(s) = meta("split_seed") {
                    tc.seed = s.parse().context("bad split_seed in model metadata")?;
                }
            }
            for (key, slot) in [
                ("train_ratio", &mut tc.train_ratio),
                ("validation_ratio", &mut tc.validation_ratio),
                ("test_ratio", &mut tc.test_ratio),
            ] {
                if let Some(v) = meta(key) {
                    *slot = v.parse().with_context(|| format!("bad {key} in model metadata"))?;
                }
            }
            let examples = examples_from_records(&load_records(records)?, mode)?;
            let split = split_dataset(examples, &tc)?;
            let report = evaluate(&classifier, &split.test)?;
            let mut out = output(&cli.out)?;
            write!(out, "{}", report.to_table())?;
            out.flush()?;
        }
        Command::Stats { records, corpus, dataset } => {
            let table = match (records, corpus) {
                (Some(path), _) => {
                    let recs = load_records(path)?;
                    let failed = recs.iter().filter(|r| r.is_error()).count();
                    let dist = label_distribution(recs.iter().filter_map(|r| r.label));
                    distribution_table(&dist, &[("error", failed)])
                }
                (None, Some(c)) => {
                    let articles = load_corpus(&cfg, c, dataset, None)?;
                    distribution_table(&article_label_distribution(&articles)?, &[])
                }
                (None, None) => bail!("stats needs --records or --corpus"),
            };
            let mut out = output(&cli.out)?;
            write!(out, "{table}")?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

