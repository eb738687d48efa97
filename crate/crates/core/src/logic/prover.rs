//! TPTP emission and the external prover adapter.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

use super::fof::Formula;
use super::{LogicError, SatStatus, Source, Verdict, DEFAULT_PROVER_TIMEOUT};

/// Environment variable naming the prover command.
pub const PROVER_ENV: &str = "UNIGRAM_PROVER_CMD";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProverConfig {
    /// Executable followed by optional arguments, whitespace-separated; the
    /// problem file path is appended.
    pub command: String,
    pub timeout: Duration,
}

impl ProverConfig {
    pub fn new(command: impl Into<String>) -> Self {
        ProverConfig {
            command: command.into(),
            timeout: DEFAULT_PROVER_TIMEOUT,
        }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(PROVER_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .map(ProverConfig::new)
    }
}

/// One `premise_<i>` axiom per premise and an optional `hypothesis` conjecture.
pub fn emit_tptp(premises: &[Formula], hypothesis: Option<&Formula>) -> String {
    let mut out = String::new();
    for (i, p) in premises.iter().enumerate() {
        out.push_str(&format!("fof(premise_{i}, axiom, {p}).\n"));
    }
    if let Some(h) = hypothesis {
        out.push_str(&format!("fof(hypothesis, conjecture, {h}).\n"));
    }
    out
}

/// Asks the prover whether all `formulas`, read as axioms, are satisfiable.
pub fn check_sat_external(formulas: &[Formula], prover: &ProverConfig) -> Result<Verdict, LogicError> {
    let named: Vec<(usize, &Formula)> = formulas.iter().enumerate().collect();
    run_prover(prover, &named).map(|(v, _)| v)
}

/// Runs the prover on the given axioms, named `premise_<index>`. On a
/// refutation that includes a proof, also returns the axioms it cites.
pub(super) fn run_prover(
    prover: &ProverConfig,
    formulas: &[(usize, &Formula)],
) -> Result<(Verdict, Option<Vec<usize>>), LogicError> {
    let mut file = tempfile::Builder::new().suffix(".p").tempfile()?;
    for (i, f) in formulas {
        writeln!(file, "fof(premise_{i}, axiom, {f}).")?;
    }
    file.flush()?;

    let mut parts = prover.command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| LogicError::ProverNotFound(prover.command.clone()))?;
    let mut child = Command::new(program)
        .args(parts)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|_| LogicError::ProverNotFound(prover.command.clone()))?;
    let mut stdout = child.stdout.take().expect("stdout is piped");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let exit = child.wait_timeout(prover.timeout)?;
    let unknown = Verdict {
        status: SatStatus::Unknown,
        witness: None,
        source: Source::External,
    };
    let Some(exit) = exit else {
        let _ = child.kill();
        let _ = child.wait();
        // a grandchild may still hold the pipe open; leave the reader detached
        drop(reader);
        return Ok((unknown, None));
    };
    let output = reader.join().unwrap_or_default();
    match parse_szs_status(&output) {
        Some(status) => {
            let used = (status == SatStatus::Unsat).then(|| cited_premises(&output)).flatten();
            Ok((
                Verdict {
                    status,
                    witness: None,
                    source: Source::External,
                },
                used,
            ))
        }
        None if exit.success() => Ok((unknown, None)),
        None => Err(LogicError::ProverCrashed {
            status: exit.to_string(),
        }),
    }
}

/// Maps the first `SZS status` line to a status.
pub fn parse_szs_status(output: &str) -> Option<SatStatus> {
    output.lines().find_map(|line| {
        let rest = line.split("SZS status").nth(1)?;
        let word = rest.split_whitespace().next()?;
        Some(match word {
            "Unsatisfiable" | "ContradictoryAxioms" => SatStatus::Unsat,
            "Satisfiable" | "CounterSatisfiable" => SatStatus::Sat,
            _ => SatStatus::Unknown,
        })
    })
}

/// Premise indices named inside an `SZS output` block, if there is one.
fn cited_premises(output: &str) -> Option<Vec<usize>> {
    let start = output.find("SZS output start")?;
    let body = &output[start..];
    let body = &body[..body.find("SZS output end").unwrap_or(body.len())];
    let mut cited = BTreeSet::new();
    for (pos, _) in body.match_indices("premise_") {
        let digits: String = body[pos + 8..].chars().take_while(char::is_ascii_digit).collect();
        if let Ok(i) = digits.parse() {
            cited.insert(i);
        }
    }
    (!cited.is_empty()).then(|| cited.into_iter().collect())
}
