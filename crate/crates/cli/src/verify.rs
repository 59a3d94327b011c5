//! `silov verify-all`: every system and every listed pair of a corpus.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::analyze::{analyze, AnalysisReport};
use crate::corpus::{read_manifest, MANIFEST};
use crate::io::write_atomic;
use crate::report::{to_json, Status, SCHEMA, VERSION};
use crate::settings::{CliError, Outcome, Settings};
use crate::spec::{load_spec, sha256_hex, LoadedSpec};
use crate::tensor::{tensor, TensorReport};

#[derive(Debug, Clone, Serialize)]
pub struct SystemRow {
    pub name: String,
    pub file: String,
    pub outcome: Outcome,
    pub messages: Vec<String>,
    /// `None` when the spec could not be loaded.
    pub report: Option<AnalysisReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRow {
    pub left: String,
    pub right: String,
    pub outcome: Outcome,
    pub messages: Vec<String>,
    pub report: Option<TensorReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: String,
    pub kind: String,
    pub version: String,
    pub manifest_sha256: String,
    pub settings: Settings,
    pub status: Status,
    pub failures: usize,
    pub systems: Vec<SystemRow>,
    pub pairs: Vec<PairRow>,
}

impl Summary {
    pub fn outcome(&self) -> Outcome {
        self.status.outcome
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::input(format!("--jobs: {e}")))
}

/// Runs the corpus. Input problems with the manifest itself are errors;
/// problems with individual files are recorded per row.
pub fn verify_all(dir: &Path, settings: &Settings, jobs: usize, timing: bool) -> Result<Summary, CliError> {
    let manifest = read_manifest(dir)?;
    let manifest_bytes = std::fs::read(dir.join(MANIFEST)).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    let pool = pool(jobs)?;

    let loaded: Vec<Result<LoadedSpec, CliError>> =
        manifest.systems.iter().map(|s| load_spec(&dir.join(&s.file))).collect();
    let systems: Vec<SystemRow> = pool.install(|| {
        manifest
            .systems
            .par_iter()
            .zip(loaded.par_iter())
            .map(|(entry, l)| match l {
                Ok(l) => {
                    let mut messages = Vec::new();
                    if l.spec.name != entry.name {
                        messages.push(format!("{}: name `{}` differs from manifest `{}`", entry.file, l.spec.name, entry.name));
                    }
                    let a = analyze(l, settings, timing).report;
                    messages.extend(a.status.messages.iter().cloned());
                    let outcome = if messages.len() > a.status.messages.len() { Outcome::Input } else { a.status.outcome };
                    SystemRow { name: entry.name.clone(), file: entry.file.clone(), outcome, messages, report: Some(a) }
                }
                Err(e) => SystemRow {
                    name: entry.name.clone(),
                    file: entry.file.clone(),
                    outcome: e.outcome,
                    messages: vec![e.message.clone()],
                    report: None,
                },
            })
            .collect()
    });

    let find = |name: &str| manifest.systems.iter().position(|s| s.name == name).expect("pairs are validated against systems");
    let pairs: Vec<PairRow> = pool.install(|| {
        manifest
            .pairs
            .par_iter()
            .map(|[a, b]| {
                let (la, lb) = (&loaded[find(a)], &loaded[find(b)]);
                match (la, lb) {
                    (Ok(la), Ok(lb)) => {
                        let t = tensor(la, lb, settings, timing);
                        PairRow { left: a.clone(), right: b.clone(), outcome: t.status.outcome, messages: t.status.messages.clone(), report: Some(t) }
                    }
                    _ => {
                        let broken: Vec<&str> = [(a, la), (b, lb)].iter().filter(|(_, l)| l.is_err()).map(|(n, _)| n.as_str()).collect();
                        PairRow {
                            left: a.clone(),
                            right: b.clone(),
                            outcome: Outcome::Input,
                            messages: vec![format!("skipped: unreadable spec for {}", broken.join(", "))],
                            report: None,
                        }
                    }
                }
            })
            .collect()
    });

    let mut status = Status::default();
    let mut failures = 0;
    for (label, outcome, messages) in systems
        .iter()
        .map(|r| (r.name.clone(), r.outcome, &r.messages))
        .chain(pairs.iter().map(|r| (format!("{} (x) {}", r.left, r.right), r.outcome, &r.messages)))
    {
        if outcome != Outcome::Ok {
            failures += 1;
            let first = messages.first().map(String::as_str).unwrap_or("");
            status.record(outcome, format!("{label}: {first}"));
        }
    }
    Ok(Summary {
        schema: SCHEMA.into(),
        kind: "summary".into(),
        version: VERSION.into(),
        manifest_sha256: sha256_hex(&manifest_bytes),
        settings: settings.clone(),
        status,
        failures,
        systems,
        pairs,
    })
}

/// One report file per system and pair.
pub fn write_reports(summary: &Summary, dir: &Path) -> Result<(), CliError> {
    for row in &summary.systems {
        if let Some(r) = &row.report {
            write_atomic(&dir.join(format!("{}.analysis.json", row.name)), to_json(r).as_bytes())?;
        }
    }
    for row in &summary.pairs {
        if let Some(r) = &row.report {
            write_atomic(&dir.join(format!("{}__{}.tensor.json", row.left, row.right)), to_json(r).as_bytes())?;
        }
    }
    Ok(())
}

fn ideal(v: &Option<Vec<usize>>) -> String {
    v.as_ref().map_or("-".into(), |v| format!("{v:?}"))
}

fn mark(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "-",
    }
}

/// Human-readable table of a summary.
pub fn table(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:<18} {:<10} {:<10} {:<6} {:<12} {:<5} status", "system", "blocks (d,m)", "silov dk", "lattice", "agree", "envelope", "prop");
    for r in &s.systems {
        match &r.report {
            Some(a) => {
                let blocks: Vec<String> = a.blocks.iter().map(|[d, m]| format!("{d}x{m}")).collect();
                let env: Vec<String> = a.envelope_blocks.iter().map(|[d, m]| format!("{d}x{m}")).collect();
                let agree = match a.silov_killed.agree {
                    Some(true) => "yes",
                    Some(false) => "NO",
                    None => "-",
                };
                let prop = a.propagation.as_ref().map_or("-".into(), |p| p.value.to_string());
                let _ = writeln!(
                    out,
                    "{:<16} {:<18} {:<10} {:<10} {:<6} {:<12} {:<5} {}",
                    r.name,
                    blocks.join(","),
                    ideal(&a.silov_killed.kernel_intersection),
                    ideal(&a.silov_killed.lattice),
                    agree,
                    env.join(","),
                    prop,
                    r.outcome.label()
                );
            }
            None => {
                let _ = writeln!(out, "{:<16} {}: {}", r.name, r.outcome.label(), r.messages.join("; "));
            }
        }
    }
    if !s.pairs.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<26} {:<6} {:<6} {:<6} {:<6} {:<22} status", "pair", "main", "hop", "power", "prop", "silov killed");
        for r in &s.pairs {
            let label = format!("{} (x) {}", r.left, r.right);
            match &r.report {
                Some(t) => {
                    let killed = t.main_theorem.as_ref().map_or("-".into(), |m| {
                        let v: Vec<String> = m.silov_kernel_intersection.iter().map(|[i, j]| format!("({i},{j})")).collect();
                        format!("[{}]", v.join(","))
                    });
                    let _ = writeln!(
                        out,
                        "{:<26} {:<6} {:<6} {:<6} {:<6} {:<22} {}",
                        label,
                        mark(t.main_theorem.as_ref().map(|m| m.passed)),
                        mark(t.hopenwasser.as_ref().map(|h| h.passed)),
                        mark(t.power_tensor.as_ref().map(|p| p.passed)),
                        mark(t.prop_max.as_ref().map(|p| p.passed)),
                        killed,
                        r.outcome.label()
                    );
                }
                None => {
                    let _ = writeln!(out, "{:<26} {}: {}", label, r.outcome.label(), r.messages.join("; "));
                }
            }
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{} systems, {} pairs, {} not ok; exit code {}",
        s.systems.len(),
        s.pairs.len(),
        s.failures,
        s.status.exit_code
    );
    out
}
