//! `vcot`: generate corpora, train, evaluate, run ablations and render
//! reports.
//!
//! Exit status is 0 on success, 1 on runtime or input errors and 2 on
//! usage errors.

mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use vcot::chartgen::{generate_corpus, load_corpus, save_corpus, CorpusRecord};
use vcot::metrics::{classify_error, evaluate, run_ablation, EvalRecord, Report};
use vcot::model::{load_checkpoint, save_checkpoint, Checkpoint, Vocabulary};
use vcot::train::{ablation_variant, build_vocabulary, fit, history_table, split_corpus, FitResult, TrainConfig, Variant};

use manifest::Manifest;

#[derive(Parser, Debug)]
#[command(name = "vcot", version, about = "Chart summarization with visual chain-of-thought on synthetic charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on the train split of a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// `key = value` training config; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for the checkpoint, history and manifest.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's variant.
        #[arg(long)]
        variant: Option<String>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate summaries with a checkpoint and score them.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        report_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Split::Test)]
        split: Split,
    },
    /// Train and evaluate the four ablation variants.
    Ablate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a stored report.
    Report {
        /// A `report.json` file or a directory holding one.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Split {
    All,
    Train,
    Val,
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Delimited,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen { n, seed, out } => gen(n, seed, &out),
        Command::Train {
            corpus,
            config,
            out,
            variant,
            seed,
        } => train(&corpus, config.as_deref(), &out, variant.as_deref(), seed),
        Command::Eval {
            corpus,
            ckpt,
            report_dir,
            split,
        } => eval(&corpus, &ckpt, &report_dir, split),
        Command::Ablate {
            corpus,
            config,
            out_dir,
            seed,
        } => ablate(&corpus, config.as_deref(), &out_dir, seed),
        Command::Report { input, format } => report(&input, format),
    }
}

fn args() -> Vec<String> {
    std::env::args().skip(1).collect()
}

fn require(path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("{}: no such file", path.display());
    }
    Ok(())
}

fn read_corpus_file(path: &Path) -> Result<Vec<CorpusRecord>> {
    require(path)?;
    load_corpus(path).with_context(|| format!("reading corpus {}", path.display()))
}

/// Config text with command-line overrides appended; later keys win.
fn load_config(path: Option<&Path>, variant: Option<&str>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut text = match path {
        Some(p) => {
            require(p)?;
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
        }
        None => String::new(),
    };
    if let Some(v) = variant {
        ablation_variant(v)?;
        text.push_str(&format!("\nvariant = {v}\n"));
    }
    if let Some(s) = seed {
        text.push_str(&format!("\nseed = {s}\n"));
    }
    let what = path.map_or_else(|| "default config".to_string(), |p| p.display().to_string());
    TrainConfig::parse(&text).with_context(|| format!("parsing {what}"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn gen(n: usize, seed: u64, out: &Path) -> Result<()> {
    let records = generate_corpus(n, seed);
    save_corpus(&records, out).with_context(|| format!("writing {}", out.display()))?;
    let mut m = Manifest::new("gen", args());
    m.seed("corpus_seed", seed);
    m.artifact(out)?;
    let path = manifest::sibling(out);
    m.write(&path)?;
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn checkpoint_meta(config: &TrainConfig, corpus_hash: &str, fitted: &FitResult) -> BTreeMap<String, String> {
    [
        ("variant", config.variant.name().to_string()),
        ("seed", config.seed.to_string()),
        ("corpus_sha256", corpus_hash.to_string()),
        ("best_epoch", fitted.best_epoch.to_string()),
        ("best_val_nll", format!("{:.6}", fitted.best_val_nll)),
        ("steps", fitted.steps.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Writes checkpoint, history and config snapshot into `dir`; returns their
/// paths.
fn save_run(dir: &Path, config: &TrainConfig, vocab: &Vocabulary, fitted: &FitResult, corpus_hash: &str) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let ckpt = dir.join("model.ckpt");
    let checkpoint = Checkpoint {
        params: fitted.params.clone(),
        vocab: vocab.clone(),
        meta: checkpoint_meta(config, corpus_hash, fitted),
    };
    save_checkpoint(&checkpoint, &ckpt).with_context(|| format!("writing {}", ckpt.display()))?;
    let history = dir.join("history.tsv");
    write(&history, history_table(&fitted.history))?;
    let snapshot = dir.join("config.txt");
    write(&snapshot, config.to_text())?;
    Ok(vec![ckpt, history, snapshot])
}

fn train(corpus_path: &Path, config_path: Option<&Path>, out: &Path, variant: Option<&str>, seed: Option<u64>) -> Result<()> {
    let records = read_corpus_file(corpus_path)?;
    let config = load_config(config_path, variant, seed)?;
    let vocab = build_vocabulary(&records);
    let split = split_corpus(&records);
    let fitted = fit(&config, &split.train, &split.val, &vocab)?;

    let corpus_hash = manifest::sha256_file(corpus_path)?;
    let artifacts = save_run(out, &config, &vocab, &fitted, &corpus_hash)?;
    let mut m = Manifest::new("train", args());
    m.seed("train_seed", config.seed);
    m.config(&config.to_text());
    m.input(corpus_path, &corpus_hash);
    for a in &artifacts {
        m.artifact(a)?;
    }
    m.write(&out.join("manifest.json"))?;
    println!(
        "{}: {} epochs, {} steps, best val NLL {:.4} at epoch {} ({:?})",
        config.variant,
        fitted.history.len(),
        fitted.steps,
        fitted.best_val_nll,
        fitted.best_epoch,
        fitted.stop
    );
    Ok(())
}

fn select(records: Vec<CorpusRecord>, split: Split) -> Vec<CorpusRecord> {
    let s = split_corpus(&records);
    match split {
        Split::All => records,
        Split::Train => s.train,
        Split::Val => s.val,
        Split::Test => s.test,
    }
}

fn generations_table(report_records: &[EvalRecord]) -> String {
    let mut s = String::from("id\terror\treasoning\tsummary\treference\n");
    for e in report_records {
        let err = classify_error(&e.candidate_summary, &e.spec, &e.facts, &e.reference_summary);
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            e.id,
            err.name(),
            e.candidate_reasoning,
            e.candidate_summary,
            e.reference_summary
        ));
    }
    s
}

fn eval(corpus_path: &Path, ckpt_path: &Path, report_dir: &Path, split: Split) -> Result<()> {
    require(ckpt_path)?;
    let records = select(read_corpus_file(corpus_path)?, split);
    if records.is_empty() {
        bail!("{}: the selected split is empty", corpus_path.display());
    }
    let ckpt = load_checkpoint(ckpt_path).with_context(|| format!("reading checkpoint {}", ckpt_path.display()))?;
    let variant = match ckpt.meta.get("variant") {
        Some(v) => ablation_variant(v)?,
        None => Variant::Full,
    };
    let (report, evals) = evaluate(&ckpt.params, &ckpt.vocab, &records, variant)?;
    create_dir(report_dir)?;
    report.write_dir(report_dir)?;
    let generations = report_dir.join("generations.tsv");
    write(&generations, generations_table(&evals))?;

    let mut m = Manifest::new("eval", args());
    m.input(corpus_path, &manifest::sha256_file(corpus_path)?);
    m.input(ckpt_path, &manifest::sha256_file(ckpt_path)?);
    for a in report_files(report_dir, &report) {
        m.artifact(&a)?;
    }
    m.artifact(&generations)?;
    m.write(&report_dir.join("manifest.json"))?;
    print!("{}", report.to_text());
    Ok(())
}

/// The files [`Report::write_dir`] produces.
fn report_files(dir: &Path, report: &Report) -> Vec<PathBuf> {
    let mut files = vec![dir.join("report.json"), dir.join("report.txt")];
    files.extend(report.tables().iter().map(|t| dir.join(format!("{}.tsv", t.name))));
    files
}

fn ablate(corpus_path: &Path, config_path: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let records = read_corpus_file(corpus_path)?;
    let base = load_config(config_path, None, seed)?;
    let vocab = build_vocabulary(&records);
    let corpus_hash = manifest::sha256_file(corpus_path)?;
    let runs = run_ablation(&records, &base, &vocab, &Variant::ALL)?;

    let mut m = Manifest::new("ablate", args());
    m.seed("train_seed", base.seed);
    m.config(&base.to_text());
    m.input(corpus_path, &corpus_hash);
    for run in &runs {
        let dir = out_dir.join(run.variant.name());
        let config = run.variant.apply(&base);
        for a in save_run(&dir, &config, &vocab, &run.fit, &corpus_hash)? {
            m.artifact(&a)?;
        }
        run.report.write_dir(&dir)?;
        for a in report_files(&dir, &run.report) {
            m.artifact(&a)?;
        }
    }
    let rows: Vec<_> = runs.iter().map(|r| r.row()).collect();
    let full = runs.iter().find(|r| r.variant == Variant::Full).expect("full variant runs");
    let combined = Report {
        ablation: rows,
        ..full.report.clone()
    };
    combined.write_dir(out_dir)?;
    for a in report_files(out_dir, &combined) {
        m.artifact(&a)?;
    }
    m.write(&out_dir.join("manifest.json"))?;
    print!("{}", combined.to_text());
    Ok(())
}

fn report(input: &Path, format: Format) -> Result<()> {
    let path = if input.is_dir() { input.join("report.json") } else { input.to_path_buf() };
    require(&path)?;
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let report = Report::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Delimited => print!("{}", report.to_delimited()),
    }
    Ok(())
}
