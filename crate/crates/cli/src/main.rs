//! `crsq`: mining usage questions from review dumps, generating and
//! evaluating questions, and serving question lookup and annotation.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error, 3 adapter
//! or service error.

mod commands;
mod config;
mod manifest;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Config;

/// Failure class of a run; selects the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Service(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Service(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) | Failure::Service(e) => e,
        }
    }
}

pub trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
    fn service(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }

    fn service(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Service(e.into()))
    }
}

#[derive(Parser)]
#[command(name = "crsq", version, about = "Usage-question mining, generation and evaluation over product reviews")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, env = "CRSQ_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for every sampling step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct CorpusArgs {
    /// Product metadata, JSON lines (`asin`, `title`, `category`), plain or gzip.
    #[arg(long)]
    pub meta: PathBuf,
    /// Reviews, JSON lines (`reviewText`, `asin`, `overall`), plain or gzip.
    #[arg(long)]
    pub reviews: PathBuf,
    /// Category list, `name<TAB>parent` per line.
    #[arg(long)]
    pub categories: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Engine {
    Template,
    Adapter,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum QuestionsKept {
    Q1,
    Q3,
    Q5,
}

#[derive(Subcommand)]
enum Command {
    /// Split reviews into sentences: JSON lines {review_id, sentence_index, category, text}.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine one aspect lexicon per category: `# category: NAME` blocks of `aspect<TAB>support`.
    MineAspects {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        min_support: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select candidate sentences: JSON lines {category, review_id, sentence_index, text, clause_texts}.
    Select {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Lexicon file from `mine-aspects`; mined on the fly when absent.
        #[arg(long)]
        lexicons: Option<PathBuf>,
        #[arg(long)]
        min_support: Option<u64>,
        /// Keep activity sentences without an aspect-value pair too.
        #[arg(long)]
        no_require_aspect: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample up to N candidates per category without replacement.
    Sample {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        per_category: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate one question or N/A per sentence: JSON lines {id, category, label, provenance, flags, error}.
    ///
    /// Input is a candidates file or a dataset TSV (whose record ids are kept).
    Generate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "template")]
        engine: Engine,
        /// Zero-based template index.
        #[arg(long, conflicts_with = "seeded")]
        template: Option<usize>,
        /// Draw the template per sentence from the seed.
        #[arg(long)]
        seeded: bool,
        /// Adapter process, run through `sh -c`; one request line in, one answer line out.
        #[arg(long)]
        adapter_command: Option<String>,
        /// Adapter URL; the request line is POSTed as text/plain.
        #[arg(long, conflicts_with = "adapter_command")]
        adapter_url: Option<String>,
        #[arg(long)]
        timeout_ms: Option<u64>,
        #[arg(long)]
        in_flight: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against a reference dataset: Accuracy, BLEU-4, ROUGE-L.
    Evaluate {
        /// Reference dataset TSV.
        #[arg(long)]
        references: PathBuf,
        /// Predictions from `generate`.
        #[arg(long, required_unless_present = "first_reference")]
        predictions: Option<PathBuf>,
        /// Predict each record's first reference question (self-consistency check).
        #[arg(long)]
        first_reference: bool,
        /// ROUGE-L variant: f1 or recall.
        #[arg(long)]
        rouge: Option<String>,
        /// Machine-readable JSON report.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render evaluation reports side by side: one row per metric.
    Compare {
        /// `LABEL=report.json`, one per column.
        #[arg(required = true)]
        reports: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a dataset into train and test files.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Reduce a training set by question count or by sentence fraction.
    Reduce {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, value_enum, required_unless_present = "fraction")]
        questions: Option<QuestionsKept>,
        #[arg(long, conflicts_with = "questions")]
        fraction: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a question index from a generated-questions file or a dataset TSV.
    Index {
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        include_generic: bool,
        #[arg(long)]
        cosine: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// One-shot index query; prints {ranked: [{id, category, question, score}]}.
    Query {
        #[arg(long)]
        index: PathBuf,
        text: String,
        #[arg(long)]
        category: Option<String>,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
    },
    /// Serve index queries: POST /query {text, category?, k}; POST /reload.
    ServeQuestions {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Run the annotation service with its event log.
    ServeAnnotation {
        /// Event log; replayed when it exists.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        port: Option<u16>,
        /// Static files for the annotation UI.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        lease_secs: Option<u64>,
        /// Create VALIDATE and PARAPHRASE tasks only through POST /batches.
        #[arg(long)]
        manual_batches: bool,
        /// Candidates file or dataset TSV loaded as the first WRITE batch of a new log.
        #[arg(long)]
        sentences: Option<PathBuf>,
    },
    /// Print record, N/A and question counts and the per-category table.
    DatasetStats {
        #[arg(long)]
        dataset: PathBuf,
        /// Accept applicable records with fewer than five questions.
        #[arg(long)]
        lenient: bool,
        #[arg(long)]
        json: bool,
    },
    /// Write synthetic data for benchmarks and smoke runs.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Review corpus in the Amazon JSON-lines layout.
    Corpus {
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        reviews: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        sentences: usize,
        /// About one sentence in this many carries a usage clause.
        #[arg(long, default_value_t = 20)]
        usage_every: usize,
    },
    /// Dataset TSV of the released shape (1,115 records, 277 N/A).
    Dataset {
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).usage()?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    use commands as c;
    let mut cfg = resolve_config(&cli)?;
    if cfg.threads > 1 {
        std::env::set_var("RAYON_NUM_THREADS", cfg.threads.to_string());
    }
    match cli.command {
        Command::Ingest { corpus, out } => c::ingest(&mut cfg, &corpus, &out),
        Command::MineAspects { corpus, min_support, out } => {
            if let Some(m) = min_support {
                cfg.aspects.min_support = m;
            }
            c::mine_aspects(&mut cfg, &corpus, &out)
        }
        Command::Select {
            corpus,
            lexicons,
            min_support,
            no_require_aspect,
            out,
        } => {
            if let Some(m) = min_support {
                cfg.aspects.min_support = m;
            }
            if no_require_aspect {
                cfg.aspects.require_aspect = false;
            }
            c::select(&mut cfg, &corpus, lexicons.as_deref(), &out)
        }
        Command::Sample { candidates, per_category, out } => {
            if let Some(n) = per_category {
                cfg.sample.per_category = n;
            }
            c::sample(&cfg, &candidates, &out)
        }
        Command::Generate {
            input,
            engine,
            template,
            seeded,
            adapter_command,
            adapter_url,
            timeout_ms,
            in_flight,
            out,
        } => {
            let g = &mut cfg.generate;
            if seeded {
                g.template = None;
            } else if template.is_some() {
                g.template = template;
            }
            if adapter_command.is_some() {
                g.adapter_command = adapter_command;
                g.adapter_url = None;
            }
            if adapter_url.is_some() {
                g.adapter_url = adapter_url;
                g.adapter_command = None;
            }
            if let Some(t) = timeout_ms {
                g.timeout_ms = t;
            }
            if let Some(n) = in_flight {
                g.in_flight = n;
            }
            c::generate(&cfg, &input, engine, &out)
        }
        Command::Evaluate {
            references,
            predictions,
            first_reference,
            rouge,
            out,
        } => {
            if let Some(r) = rouge {
                cfg.evaluate.rouge = serde_json::from_value(serde_json::Value::String(r.to_lowercase()))
                    .map_err(|_| anyhow::anyhow!("--rouge must be f1 or recall"))
                    .usage()?;
            }
            c::evaluate(&cfg, &references, predictions.as_deref(), first_reference, &out)
        }
        Command::Compare { reports, out } => c::compare(&cfg, &reports, out.as_deref()),
        Command::Split {
            dataset,
            train_fraction,
            train_out,
            test_out,
        } => {
            if let Some(f) = train_fraction {
                cfg.split.train_fraction = f;
            }
            c::split(&cfg, &dataset, &train_out, &test_out)
        }
        Command::Reduce {
            train,
            questions,
            fraction,
            out,
        } => c::reduce(&cfg, &train, questions, fraction, &out),
        Command::Index {
            questions,
            include_generic,
            cosine,
            out,
        } => {
            if include_generic {
                cfg.index.include_generic = true;
            }
            if cosine {
                cfg.index.weighting = crsq_core::store::Weighting::Cosine;
            }
            c::index(&cfg, &questions, &out)
        }
        Command::Query { index, text, category, k } => serve::query(&index, &text, category.as_deref(), k),
        Command::ServeQuestions { index, port } => {
            if let Some(p) = port {
                cfg.serve.questions_port = p;
            }
            serve::serve_questions(&cfg, &index)
        }
        Command::ServeAnnotation {
            log,
            port,
            static_dir,
            lease_secs,
            manual_batches,
            sentences,
        } => {
            let s = &mut cfg.serve;
            if let Some(p) = port {
                s.annotation_port = p;
            }
            if static_dir.is_some() {
                s.static_dir = static_dir;
            }
            if let Some(l) = lease_secs {
                s.lease_secs = l;
            }
            if manual_batches {
                s.auto_advance = false;
            }
            serve::serve_annotation(&cfg, &log, sentences.as_deref())
        }
        Command::DatasetStats { dataset, lenient, json } => c::dataset_stats(&dataset, lenient, json),
        Command::Synth(SynthCommand::Corpus {
            meta,
            reviews,
            sentences,
            usage_every,
        }) => c::synth_corpus(&cfg, &meta, &reviews, sentences, usage_every),
        Command::Synth(SynthCommand::Dataset { out }) => c::synth_dataset(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
