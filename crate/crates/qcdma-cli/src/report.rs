//! Result emission: CSV rows with a reproducibility header, JSON documents
//! embedding the effective spec, and text tables mirroring the loss,
//! crosstalk and fidelity table layouts.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::Context;
use qcdma::metrics::{CrosstalkResult, FidelityResult, LossResult};

use crate::spec::{ExperimentSpec, OutputFormat};

/// Fixed CSV column order shared by the table experiments.
pub const RESULT_COLUMNS: &str = "s,users,metric,mean,stderr,trials,seed";

pub enum TableKind {
    Loss,
    Crosstalk,
    Fidelity,
}

impl TableKind {
    fn title(&self) -> &'static str {
        match self {
            TableKind::Loss => "Photon loss probability",
            TableKind::Crosstalk => "Crosstalk probability",
            TableKind::Fidelity => "Fidelity (per state)",
        }
    }
}

/// One emitted row in the shared result schema.
pub struct ResultRow {
    pub s: usize,
    pub users: usize,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

impl From<&LossResult> for ResultRow {
    fn from(r: &LossResult) -> Self {
        ResultRow {
            s: r.spreading_factor,
            users: r.users,
            metric: "loss".into(),
            mean: r.mean,
            stderr: r.std_err,
            trials: r.trials,
            seed: r.seed,
        }
    }
}

impl From<&CrosstalkResult> for ResultRow {
    fn from(r: &CrosstalkResult) -> Self {
        ResultRow {
            s: r.spreading_factor,
            users: r.users,
            metric: "crosstalk".into(),
            mean: r.mean,
            stderr: r.std_err,
            trials: r.runs,
            seed: r.seed,
        }
    }
}

/// Each fidelity result expands to a fidelity row and an infidelity row.
pub fn fidelity_rows(r: &FidelityResult) -> [ResultRow; 2] {
    [
        ResultRow {
            s: r.spreading_factor,
            users: r.users,
            metric: format!("fidelity-{}", r.state.name()),
            mean: r.mean_fidelity,
            stderr: r.std_err,
            trials: r.trials,
            seed: r.seed,
        },
        ResultRow {
            s: r.spreading_factor,
            users: r.users,
            metric: format!("infidelity-{}", r.state.name()),
            mean: r.mean_infidelity,
            stderr: r.std_err,
            trials: r.trials,
            seed: r.seed,
        },
    ]
}

fn csv_document(spec: &ExperimentSpec, command: &str, rows: &[ResultRow]) -> String {
    let mut out = spec.header(command);
    out.push_str(RESULT_COLUMNS);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.9e},{:.9e},{},{}",
            r.s, r.users, r.metric, r.mean, r.stderr, r.trials, r.seed
        );
    }
    out
}

fn json_document(spec: &ExperimentSpec, command: &str, rows: &[ResultRow]) -> String {
    let results: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "s": r.s,
                "users": r.users,
                "metric": r.metric,
                "mean": r.mean,
                "stderr": r.stderr,
                "trials": r.trials,
                "seed": r.seed,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "spec": spec.to_json(command),
        "results": results,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json");
    s.push('\n');
    s
}

/// Rows laid out like the tables: one line per S (or per state for the
/// fidelity sweep), one column per user count.
fn table_document(
    spec: &ExperimentSpec,
    command: &str,
    kind: &TableKind,
    rows: &[ResultRow],
) -> String {
    let mut out = spec.header(command);
    let _ = writeln!(out, "# {}", kind.title());

    let mut users: Vec<usize> = rows.iter().map(|r| r.users).collect();
    users.sort_unstable();
    users.dedup();

    // row labels: S for loss/crosstalk, metric name for fidelity
    let mut labels: Vec<String> = Vec::new();
    for r in rows {
        let label = match kind {
            TableKind::Fidelity => format!("{} (S={})", r.metric, r.s),
            _ => format!("S={}", r.s),
        };
        if !labels.contains(&label) {
            labels.push(label);
        }
    }

    let _ = write!(out, "{:<24}", "");
    for u in &users {
        let _ = write!(out, "{:>14}", format!("N={u}"));
    }
    out.push('\n');
    for label in &labels {
        let _ = write!(out, "{label:<24}");
        for &u in &users {
            let cell = rows.iter().find(|r| {
                r.users == u
                    && match kind {
                        TableKind::Fidelity => format!("{} (S={})", r.metric, r.s) == *label,
                        _ => format!("S={}", r.s) == *label,
                    }
            });
            match cell {
                Some(r) => {
                    let _ = write!(out, "{:>14.6}", r.mean);
                }
                None => {
                    let _ = write!(out, "{:>14}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn render(
    spec: &ExperimentSpec,
    command: &str,
    kind: TableKind,
    rows: &[ResultRow],
) -> String {
    match spec.format {
        OutputFormat::Csv => csv_document(spec, command, rows),
        OutputFormat::Json => json_document(spec, command, rows),
        OutputFormat::TextTable => table_document(spec, command, &kind, rows),
    }
}

/// Write to the spec's output path, or stdout when none is set.
pub fn emit(spec: &ExperimentSpec, content: &str) -> anyhow::Result<()> {
    match &spec.out {
        Some(path) => write_file(path, content),
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .context("writing stdout")?;
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, content: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}
