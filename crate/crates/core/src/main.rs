use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Deserialize;

use codoc::bpe::BpeVocab;
use codoc::corpus::{self, CorpusError};
use codoc::extract::MethodRecord;
use codoc::metrics;
use codoc::pipeline::{self, PipelineConfig, PipelineError};
use codoc::style;

#[derive(Parser)]
#[command(name = "codoc", version, about = "Python method corpus tooling")]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InOut {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Directory of .py files to method records (JSON lines).
    Extract {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Normalize docstrings and replace URLs, paths and hashes.
    Clean(InOut),
    /// Label docstring styles; fractions go to standard output.
    Classify(InOut),
    /// Drop records from files whose content duplicates an earlier file.
    Dedup(InOut),
    /// Repository-level train/valid/test split.
    Split {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output_dir: PathBuf,
    },
    /// Length histograms as CSV files.
    Stats {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output_dir: PathBuf,
    },
    /// Train a byte-level BPE vocabulary on reassembled methods.
    TrainBpe {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output_dir: PathBuf,
        #[arg(long)]
        vocab_size: Option<usize>,
    },
    /// Encode text to token ids (JSON array on standard output).
    Encode {
        #[arg(long)]
        vocab_dir: PathBuf,
        #[arg(short, long, conflicts_with = "text")]
        input: Option<PathBuf>,
        #[arg(long)]
        text: Option<String>,
    },
    /// Span-masked denoising examples.
    MakePretrain {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        vocab_dir: PathBuf,
        #[arg(long)]
        mask_rate: Option<f64>,
    },
    /// Multi-mode translation examples.
    MakeMultimode(InOut),
    /// Docstring embeddings projected to two dimensions (CSV x,y,style).
    Embed(InOut),
    /// BLEU, ROUGE and syntax rate of hypotheses against references.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Command run through `sh -c` per sample; exit status 0 is valid.
        #[arg(long)]
        validator: Option<String>,
    },
    /// extract, clean, classify, dedup, split and make-multimode in one go.
    Pipeline {
        #[arg(long)]
        input_dir: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

const MERGES_FILE: &str = "merges.txt";
const TOKENS_FILE: &str = "tokens.tsv";

fn read_records(path: &Path) -> Result<Vec<MethodRecord>, PipelineError> {
    Ok(corpus::read_jsonl(path)?)
}

fn write_records(path: &Path, records: &[MethodRecord]) -> Result<(), PipelineError> {
    Ok(corpus::write_jsonl(path, records)?)
}

fn load_vocab(dir: &Path) -> Result<BpeVocab, PipelineError> {
    BpeVocab::load(&dir.join(MERGES_FILE), &dir.join(TOKENS_FILE))
        .map_err(|e| PipelineError::Input(format!("{}: {e}", dir.display())))
}

fn stdout_line(s: &str) -> Result<(), PipelineError> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{s}").map_err(|e| PipelineError::Internal(e.to_string()))
}

#[derive(Deserialize)]
struct Scored {
    id: serde_json::Value,
    text: String,
}

fn read_scored(path: &Path) -> Result<Vec<(String, String)>, PipelineError> {
    let rows: Vec<Scored> = corpus::read_jsonl(path)?;
    let mut out: Vec<(String, String)> = rows.into_iter().map(|r| (r.id.to_string(), r.text)).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    if out.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(PipelineError::Input(format!("{}: duplicate ids", path.display())));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match cli.command {
        Command::Extract { input, output } => {
            let files = pipeline::collect_sources(&input)?;
            let (records, summary) = pipeline::extract_sources(&files);
            info!("{} files, {} skipped, {} methods", summary.files, summary.skipped.len(), records.len());
            write_records(&output, &records)?;
        }
        Command::Clean(io) => {
            cfg.validate()?;
            let mut records = read_records(&io.input)?;
            pipeline::clean_records(&mut records, &cfg.placeholders);
            write_records(&io.output, &records)?;
        }
        Command::Classify(io) => {
            let mut records = read_records(&io.input)?;
            pipeline::classify_records(&mut records);
            write_records(&io.output, &records)?;
            let fractions = style::style_distribution(&records).map_err(|e| PipelineError::Input(e.to_string()))?;
            stdout_line(pipeline::to_json(&fractions)?.trim_end())?;
        }
        Command::Dedup(io) => {
            let records = read_records(&io.input)?;
            let before = records.len();
            let records = corpus::dedup_records(records);
            info!("{before} -> {} methods", records.len());
            write_records(&io.output, &records)?;
        }
        Command::Split { input, output_dir } => {
            cfg.validate()?;
            let records = read_records(&input)?;
            let repos: Vec<&str> = records.iter().map(|r| r.repo.as_str()).collect();
            let assignment = corpus::split(&repos, cfg.seed, &cfg.ratios())?;
            fs::create_dir_all(&output_dir).map_err(|e| CorpusError::io(&output_dir, e))?;
            let tsv = output_dir.join("splits.tsv");
            fs::write(&tsv, pipeline::split_tsv(&assignment)).map_err(|e| CorpusError::io(&tsv, e))?;
            for (sp, recs) in corpus::partition(records, cfg.seed, &cfg.ratios())? {
                write_records(&output_dir.join(format!("{}.jsonl", sp.as_str())), &recs)?;
            }
        }
        Command::Stats { input, output_dir } => {
            let records = read_records(&input)?;
            let report = corpus::stats(&records)?;
            report.write_csvs(&output_dir)?;
            let json = output_dir.join("stats.json");
            fs::write(&json, pipeline::to_json(&report)?).map_err(|e| CorpusError::io(&json, e))?;
        }
        Command::TrainBpe { input, output_dir, vocab_size } => {
            if let Some(v) = vocab_size {
                cfg.vocab_size = v;
            }
            cfg.validate()?;
            let records = read_records(&input)?;
            let vocab = pipeline::train_bpe(&records, cfg.vocab_size)?;
            info!("{} merges, {} tokens", vocab.merges().len(), vocab.len());
            fs::create_dir_all(&output_dir).map_err(|e| CorpusError::io(&output_dir, e))?;
            vocab
                .save(&output_dir.join(MERGES_FILE), &output_dir.join(TOKENS_FILE))
                .map_err(|e| PipelineError::Internal(e.to_string()))?;
        }
        Command::Encode { vocab_dir, input, text } => {
            let vocab = load_vocab(&vocab_dir)?;
            let text = match (input, text) {
                (Some(p), _) => fs::read_to_string(&p).map_err(|e| CorpusError::io(&p, e))?,
                (None, Some(t)) => t,
                (None, None) => return Err(PipelineError::Input("give --input or --text".into())),
            };
            stdout_line(&serde_json::to_string(&vocab.encode(&text)).map_err(|e| PipelineError::Internal(e.to_string()))?)?;
        }
        Command::MakePretrain { io, vocab_dir, mask_rate } => {
            if let Some(r) = mask_rate {
                cfg.mask_rate = r;
            }
            cfg.validate()?;
            let vocab = load_vocab(&vocab_dir)?;
            let records = read_records(&io.input)?;
            let examples = pipeline::pretrain_examples(&records, &vocab, cfg.mask_rate, cfg.seed)?;
            corpus::write_jsonl(&io.output, &examples)?;
        }
        Command::MakeMultimode(io) => {
            let records = read_records(&io.input)?;
            let examples = pipeline::multimode_examples(&records);
            info!("{} examples from {} methods", examples.len(), records.len());
            corpus::write_jsonl(&io.output, &examples)?;
        }
        Command::Embed(io) => {
            let records = read_records(&io.input)?;
            let rows = pipeline::embed_docstrings(&records)?;
            let csv = pipeline::embedding_csv(&rows);
            fs::write(&io.output, csv).map_err(|e| CorpusError::io(&io.output, e))?;
        }
        Command::Score { hyp, reference, output, validator } => {
            let validator = validator.or(cfg.external_validator.clone());
            let hyps = read_scored(&hyp)?;
            let refs = read_scored(&reference)?;
            let hyp_ids: Vec<&String> = hyps.iter().map(|h| &h.0).collect();
            let ref_ids: Vec<&String> = refs.iter().map(|r| &r.0).collect();
            if hyp_ids != ref_ids {
                return Err(PipelineError::Input("hypothesis and reference ids differ".into()));
            }
            let h: Vec<&str> = hyps.iter().map(|x| x.1.as_str()).collect();
            let r: Vec<&str> = refs.iter().map(|x| x.1.as_str()).collect();
            let report = metrics::score(&h, &r, validator.as_deref()).map_err(|e| match e {
                metrics::MetricsError::Validator(_) => PipelineError::Internal(e.to_string()),
                _ => PipelineError::Input(e.to_string()),
            })?;
            let json = pipeline::to_json(&report)?;
            match output {
                Some(p) => fs::write(&p, json).map_err(|e| CorpusError::io(&p, e))?,
                None => stdout_line(json.trim_end())?,
            }
        }
        Command::Pipeline { input_dir, output_dir } => {
            if let Some(d) = input_dir {
                cfg.input_dir = d;
            }
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            if cfg.input_dir.as_os_str().is_empty() {
                return Err(PipelineError::MissingKey("input_dir"));
            }
            if cfg.output_dir.as_os_str().is_empty() {
                return Err(PipelineError::MissingKey("output_dir"));
            }
            let summary = pipeline::run_pipeline(&cfg)?;
            info!("{} methods after dedup", summary.after_dedup);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info })
        .parse_env("CODOC_LOG")
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
