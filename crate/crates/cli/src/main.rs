mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use unigram::fol::Lexicon;
use unigram::logic::{label, parse_fof, parse_tptp, DeciderMode, Formula, LabeledPair, LogicError, PROVER_ENV};
use unigram::pipeline::{
    assemble_dataset, read_jsonl, validate_dataset, write_dataset, PipelineError, RunReport, SplitRatios,
    ValidationOptions,
};

use config::{FileConfig, Overrides, RunConfig};

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub code: u8,
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    fn new(code: u8, stage: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            stage,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(2, "config", message)
    }

    pub fn prover(message: impl Into<String>) -> Self {
        Self::new(3, "prover", message)
    }

    pub fn balance(message: impl Into<String>) -> Self {
        Self::new(4, "balance", message)
    }

    fn io(stage: &'static str, e: impl std::fmt::Display) -> Self {
        Self::new(1, stage, e.to_string())
    }
}

fn is_prover_error(e: &LogicError) -> bool {
    matches!(
        e,
        LogicError::ProverNotFound(_) | LogicError::ProverCrashed { .. } | LogicError::Io(_) | LogicError::NoProver
    )
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::Logic(l) if is_prover_error(l) => CliError::prover(e.to_string()),
            PipelineError::SizeTooSmall { .. }
            | PipelineError::InsufficientNonNeutrals(_)
            | PipelineError::DegenerateLabels(_)
            | PipelineError::StreamExhausted(_) => CliError::balance(e.to_string()),
            PipelineError::Config(_) | PipelineError::Generation(_) => CliError::config(e.to_string()),
            _ => CliError::new(1, "generate", e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "unigram",
    version,
    about = "Generate and check labeled first-order NLI datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a balanced dataset with train/dev/test splits.
    Generate(GenerateArgs),
    /// Label problems from a TPTP file or a JSONL dataset file.
    Label(LabelArgs),
    /// Re-check a generated dataset directory.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct DeciderArgs {
    /// internal, external or fallback.
    #[arg(long, env = "UNIGRAM_DECIDER")]
    decider: Option<String>,
    /// Prover executable (and arguments); the problem file is appended.
    #[arg(long, env = PROVER_ENV)]
    prover_cmd: Option<String>,
    /// Largest domain the internal model finder grounds over.
    #[arg(long, env = "UNIGRAM_MODEL_BOUND")]
    model_bound: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    /// TOML file with defaults for any of the options below.
    #[arg(long, env = "UNIGRAM_CONFIG")]
    config: Option<PathBuf>,
    /// unigram-fol or unigram-logicnli.
    #[arg(long, env = "UNIGRAM_GRAMMAR")]
    grammar: Option<String>,
    #[arg(long, env = "UNIGRAM_SIZE")]
    size: Option<usize>,
    #[arg(long, env = "UNIGRAM_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "UNIGRAM_OUT")]
    out: Option<PathBuf>,
    #[command(flatten)]
    decider: DeciderArgs,
    /// Train/dev/test ratios, e.g. 80/10/10.
    #[arg(long, env = "UNIGRAM_SPLIT")]
    split: Option<String>,
    #[arg(long, env = "UNIGRAM_BALANCE_TOL")]
    balance_tol: Option<f64>,
    #[arg(long, env = "UNIGRAM_WORKERS")]
    workers: Option<usize>,
    /// Comma-separated subset of eng,tptp.
    #[arg(long, env = "UNIGRAM_LANGUAGES")]
    languages: Option<String>,
    /// gbm or logistic.
    #[arg(long, env = "UNIGRAM_CLASSIFIER")]
    classifier: Option<String>,
    /// Skip the complexity cap, classifier and label balancing.
    #[arg(long)]
    no_balance: bool,
}

#[derive(Args)]
struct LabelArgs {
    /// `.jsonl` dataset file, or a TPTP file whose conjecture is the hypothesis.
    input: PathBuf,
    #[command(flatten)]
    decider: DeciderArgs,
}

#[derive(Args)]
struct ValidateArgs {
    dir: PathBuf,
    /// Relabel only this many problems (chosen by keyed hash) instead of all.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Expected train/dev/test ratios.
    #[arg(long, default_value = "80/10/10")]
    split: String,
    #[arg(long, env = "UNIGRAM_MODEL_BOUND")]
    model_bound: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Label(a) => label_cmd(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn generate(a: GenerateArgs) -> Result<u8, CliError> {
    let file = match &a.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let overrides = Overrides {
        grammar: a.grammar,
        size: a.size,
        seed: a.seed,
        out: a.out,
        decider: a.decider.decider,
        prover_cmd: a.decider.prover_cmd,
        model_bound: a.decider.model_bound,
        split: a.split,
        balance_tol: a.balance_tol,
        workers: a.workers,
        languages: a.languages,
        classifier: a.classifier,
        no_balance: a.no_balance,
    };
    let cfg = RunConfig::resolve(overrides, file)?;
    let preset = cfg
        .grammar
        .build(&Lexicon::builtin())
        .map_err(|e| CliError::config(e.to_string()))?;
    let start = Instant::now();
    let mut last = 0;
    let dataset = assemble_dataset(&preset, &cfg.dataset(), |r| {
        if r.candidates >= last + 2000 {
            last = r.candidates;
            let nn: u64 = r.capped_buckets.values().sum();
            eprintln!(
                "[{:>6.1}s] {} candidates, {} labeled, {} non-neutral past the cap",
                start.elapsed().as_secs_f64(),
                r.candidates,
                r.labeled,
                nn
            );
        }
    })?;
    let effective = serde_json::to_value(&cfg).map_err(|e| CliError::io("report", e))?;
    write_dataset(&cfg.out, &dataset, &preset.grammar, cfg.languages, &effective)
        .map_err(|e| CliError::io("write", e))?;
    eprintln!("[{:>6.1}s] wrote {}", start.elapsed().as_secs_f64(), cfg.out.display());
    print_summary(&dataset.report);
    Ok(0)
}

fn print_summary(r: &RunReport) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:<22}{:>10}", "label", "count");
    for (l, n) in &r.final_labels {
        let _ = writeln!(out, "{:<22}{:>10}", l.as_str(), n);
    }
    let _ = writeln!(out, "{:<22}{:>10}", "split", "count");
    for (s, n) in &r.splits {
        let _ = writeln!(out, "{:<22}{:>10}", s.as_str(), n);
    }
    let _ = writeln!(out, "{:<22}{:>10}", "used premises", "count");
    for (b, n) in &r.final_buckets {
        let _ = writeln!(out, "{:<22}{:>10}", b, n);
    }
    let _ = writeln!(out, "{:<22}{:>10}", "discards", "count");
    for (k, n) in [
        ("sampling failures", r.sampling_failures),
        ("undecided", r.undecided),
        ("complexity cap", r.cap_discarded),
        ("classifier training", r.classifier_consumed),
        ("non-neutral surplus", r.surplus_non_neutral),
        ("mined neutrals", r.mined_neutrals),
        ("trimmed neutrals", r.trimmed_neutrals),
    ] {
        let _ = writeln!(out, "{k:<22}{n:>10}");
    }
}

fn decider_from(a: &DeciderArgs) -> Result<unigram::logic::Decider, CliError> {
    let mode: DeciderMode = match &a.decider {
        Some(s) => s.parse().map_err(CliError::config)?,
        None => DeciderMode::Internal,
    };
    if mode != DeciderMode::Internal && a.prover_cmd.is_none() {
        return Err(CliError::prover(format!(
            "decider `{}` needs --prover-cmd or {PROVER_ENV}",
            config::decider_name(mode)
        )));
    }
    let bound = a.model_bound.unwrap_or(unigram::logic::DEFAULT_MODEL_BOUND);
    if bound == 0 {
        return Err(CliError::config("model bound must be positive"));
    }
    Ok(config::decider(mode, bound, a.prover_cmd.as_deref()))
}

/// Premises and hypothesis read from the input, with an id for display.
fn read_problems(path: &Path) -> Result<Vec<(Option<String>, Vec<Formula>, Formula)>, CliError> {
    let parse_err = |m: String| CliError::new(2, "parse", format!("{}: {m}", path.display()));
    if path.extension().is_some_and(|e| e == "jsonl") {
        let records = read_jsonl(path).map_err(|e| parse_err(e.to_string()))?;
        records
            .into_iter()
            .map(|r| {
                let (Some(ps), Some(h)) = (r.premises_tptp, r.hypothesis_tptp) else {
                    return Err(parse_err(format!("problem {} has no TPTP fields", r.id)));
                };
                let ps = ps
                    .iter()
                    .map(|p| parse_fof(p))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| parse_err(format!("{}: {e}", r.id)))?;
                let h = parse_fof(&h).map_err(|e| parse_err(format!("{}: {e}", r.id)))?;
                Ok((Some(r.id), ps, h))
            })
            .collect()
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| parse_err(e.to_string()))?;
        let units = parse_tptp(&text).map_err(|e| parse_err(e.to_string()))?;
        let mut premises = Vec::new();
        let mut hypothesis = None;
        for u in units {
            if u.role == "conjecture" {
                if hypothesis.replace(u.formula).is_some() {
                    return Err(parse_err("more than one conjecture".into()));
                }
            } else {
                premises.push(u.formula);
            }
        }
        let h = hypothesis.ok_or_else(|| parse_err("no conjecture to use as hypothesis".into()))?;
        Ok(vec![(None, premises, h)])
    }
}

fn format_pair(p: &LabeledPair) -> String {
    match &p.used_premises {
        Some(used) => format!("{} used={used:?}", p.label),
        None => p.label.to_string(),
    }
}

fn label_cmd(a: LabelArgs) -> Result<u8, CliError> {
    let decider = decider_from(&a.decider)?;
    let problems = read_problems(&a.input)?;
    let mut undecided = 0;
    let mut out = std::io::stdout().lock();
    for (id, premises, h) in problems {
        let text = match label(&premises, &h, &decider) {
            Ok(pair) => format_pair(&pair),
            Err(LogicError::Undecided | LogicError::BoundTooSmall { .. }) => {
                undecided += 1;
                "unknown".to_string()
            }
            Err(LogicError::InconsistentPremises) => {
                undecided += 1;
                "inconsistent-premises".to_string()
            }
            Err(e) if is_prover_error(&e) => return Err(CliError::prover(e.to_string())),
            Err(e) => return Err(CliError::new(2, "label", e.to_string())),
        };
        let line = match id {
            Some(id) => format!("{id}\t{text}"),
            None => text,
        };
        writeln!(out, "{line}").map_err(|e| CliError::io("output", e))?;
    }
    if undecided > 0 {
        eprintln!("{undecided} problem(s) could not be decided");
        return Ok(5);
    }
    Ok(0)
}

fn validate(a: ValidateArgs) -> Result<u8, CliError> {
    let ratios: SplitRatios = a.split.parse().map_err(CliError::config)?;
    let opts = ValidationOptions {
        relabel_sample: a.sample.unwrap_or(usize::MAX),
        seed: a.seed,
        decider: unigram::logic::Decider::internal(a.model_bound.unwrap_or(unigram::logic::DEFAULT_MODEL_BOUND)),
        ratios,
        ..ValidationOptions::default()
    };
    let report = validate_dataset(&a.dir, &opts).map_err(|e| CliError::new(6, "validate", e.to_string()))?;
    eprintln!(
        "checked {} problems, relabeled {}, {} violation(s)",
        report.problems,
        report.relabeled,
        report.violations.len()
    );
    let mut out = std::io::stdout().lock();
    for v in &report.violations {
        let _ = writeln!(out, "{v}");
    }
    Ok(if report.is_clean() { 0 } else { 6 })
}
