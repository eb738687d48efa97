//! JSONL dataset files and the run report.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Problem};
use super::split::Split;
use super::PipelineError;
use crate::grammar::Grammar;
use crate::logic::Label;

pub const REPORT_FILE: &str = "report.json";

/// Which surface forms go into the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Languages {
    pub eng: bool,
    pub tptp: bool,
}

impl Default for Languages {
    fn default() -> Self {
        Languages { eng: true, tptp: true }
    }
}

impl FromStr for Languages {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Languages {
            eng: false,
            tptp: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "eng" => out.eng = true,
                "tptp" => out.tptp = true,
                other => return Err(format!("unknown language `{other}` (expected eng or tptp)")),
            }
        }
        if !out.eng && !out.tptp {
            return Err("at least one language is required".into());
        }
        Ok(out)
    }
}

impl fmt::Display for Languages {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.eng, self.tptp) {
            (true, true) => f.write_str("eng,tptp"),
            (true, false) => f.write_str("eng"),
            _ => f.write_str("tptp"),
        }
    }
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premises_eng: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise_eng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_eng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premises_tptp: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_tptp: Option<String>,
    pub label: Label,
    pub n_premises: usize,
    pub used_premises: Option<Vec<usize>>,
    pub split: Split,
    pub seed: u64,
}

impl ProblemRecord {
    pub fn from_problem(p: &Problem, grammar: &Grammar, languages: Languages) -> ProblemRecord {
        let texts = |lang: &str| -> Option<(Vec<String>, String)> {
            let i = grammar.language_index(lang).ok()?;
            let premises = p.premises.iter().map(|s| s.realizations[i].clone()).collect();
            Some((premises, p.hypothesis.realizations[i].clone()))
        };
        let eng = languages.eng.then(|| texts("eng")).flatten();
        let tptp = languages.tptp.then(|| texts("tptp")).flatten();
        ProblemRecord {
            id: p.id.clone(),
            premise_eng: eng.as_ref().map(|(ps, _)| ps.join("\n")),
            hypothesis_eng: eng.as_ref().map(|(_, h)| h.clone()),
            premises_eng: eng.map(|(ps, _)| ps),
            hypothesis_tptp: tptp.as_ref().map(|(_, h)| h.clone()),
            premises_tptp: tptp.map(|(ps, _)| ps),
            label: p.label,
            n_premises: p.n_premises(),
            used_premises: p.used_premises.clone(),
            split: p.split.unwrap_or(Split::Train),
            seed: p.seed,
        }
    }
}

pub fn write_jsonl(path: &Path, records: &[ProblemRecord]) -> Result<(), PipelineError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<ProblemRecord>, PipelineError> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Writes `train.jsonl`, `dev.jsonl`, `test.jsonl` and the report, which
/// embeds `config` alongside the run counters.
pub fn write_dataset(
    dir: &Path,
    dataset: &Dataset,
    grammar: &Grammar,
    languages: Languages,
    config: &serde_json::Value,
) -> Result<(), PipelineError> {
    fs::create_dir_all(dir)?;
    for split in Split::ALL {
        let records: Vec<ProblemRecord> = dataset
            .problems
            .iter()
            .filter(|p| p.split == Some(split))
            .map(|p| ProblemRecord::from_problem(p, grammar, languages))
            .collect();
        write_jsonl(&dir.join(format!("{split}.jsonl")), &records)?;
    }
    let report = serde_json::json!({ "config": config, "report": dataset.report });
    let mut f = File::create(dir.join(REPORT_FILE))?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    f.write_all(b"\n")?;
    Ok(())
}
