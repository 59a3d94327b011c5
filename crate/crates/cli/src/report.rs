//! Pieces shared by the report documents.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use silov_core::boundary::{IdealCertificate, IdealDecision, UniquenessEvidence, UniquenessResult};
use silov_core::Mat;

use crate::settings::{CliError, Outcome};

pub const SCHEMA: &str = "v1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A complex matrix flattened row-major into separate real and imaginary
/// arrays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexArray {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&Mat> for ComplexArray {
    fn from(m: &Mat) -> ComplexArray {
        let mut re = Vec::with_capacity(m.rows() * m.cols());
        let mut im = Vec::with_capacity(re.capacity());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        ComplexArray { rows: m.rows(), cols: m.cols(), re, im }
    }
}

fn arrays(ms: &[Mat]) -> Vec<ComplexArray> {
    ms.iter().map(ComplexArray::from).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub name: String,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Status {
    pub outcome: Outcome,
    pub exit_code: i32,
    pub messages: Vec<String>,
}

impl Default for Status {
    fn default() -> Self {
        Status { outcome: Outcome::Ok, exit_code: 0, messages: Vec::new() }
    }
}

impl Status {
    pub fn record(&mut self, outcome: Outcome, message: impl Into<String>) {
        self.outcome = self.outcome.worst(outcome);
        self.exit_code = self.outcome.code();
        self.messages.push(message.into());
    }

    pub fn record_error(&mut self, e: &CliError) {
        self.record(e.outcome, e.message.clone());
    }
}

/// Per-block uniqueness decision. The payload is the second extension when
/// the block is not a boundary representation, the peak certificate when
/// one was found, and otherwise the unique extension itself.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessEntry {
    pub block: usize,
    pub unique: bool,
    pub evidence: String,
    pub payload: Vec<ComplexArray>,
}

impl UniquenessEntry {
    pub fn new(r: &UniquenessResult, basepoint: &[Mat]) -> UniquenessEntry {
        let (evidence, payload) = match &r.evidence {
            UniquenessEvidence::Pinned => ("pinned".to_string(), arrays(basepoint)),
            UniquenessEvidence::PeakCertificate(y) => ("peak-certificate".to_string(), arrays(y)),
            UniquenessEvidence::ProbesReturned(n) => (format!("probes-returned ({n})"), arrays(basepoint)),
            UniquenessEvidence::InteriorDirection => ("interior-direction".to_string(), Vec::new()),
            UniquenessEvidence::FaceDirection => ("face-direction".to_string(), Vec::new()),
            UniquenessEvidence::ProbeWitness { trial } => (format!("probe-witness (trial {trial})"), Vec::new()),
        };
        let payload = match &r.witness {
            Some(w) => arrays(w),
            None => payload,
        };
        UniquenessEntry { block: r.block + 1, unique: r.unique, evidence, payload }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdealEntry {
    pub killed: Vec<usize>,
    pub boundary: bool,
    pub certificate: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inherited_from: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub payload: Vec<ComplexArray>,
}

impl From<&IdealDecision> for IdealEntry {
    fn from(d: &IdealDecision) -> IdealEntry {
        let mut entry = IdealEntry {
            killed: d.ideal.one_based(),
            boundary: d.boundary,
            certificate: String::new(),
            inherited_from: None,
            residual: None,
            payload: Vec::new(),
        };
        match &d.certificate {
            IdealCertificate::Faithful(c) => {
                entry.certificate = "faithful".into();
                entry.payload = arrays(c);
            }
            IdealCertificate::LeftInverse(c) => {
                entry.certificate = "left-inverse".into();
                entry.payload = arrays(c);
            }
            IdealCertificate::Inherited { from, choi } => {
                entry.certificate = "inherited".into();
                entry.inherited_from = Some(from.one_based());
                entry.payload = arrays(choi);
            }
            IdealCertificate::AffineInconsistent(r) => {
                entry.certificate = "affine-inconsistent".into();
                entry.residual = Some(*r);
            }
            IdealCertificate::Separator(y) => {
                entry.certificate = "separator".into();
                entry.payload = arrays(y);
            }
        }
        entry
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleInfo {
    pub level: usize,
    pub norm_x: f64,
    pub norm_image: f64,
}

impl From<&silov_core::boundary::Counterexample> for CounterexampleInfo {
    fn from(c: &silov_core::boundary::Counterexample) -> Self {
        CounterexampleInfo { level: c.level, norm_x: c.norm_x, norm_image: c.norm_image }
    }
}

/// Wall-clock stage timings, only collected on request since they break
/// byte-for-byte reproducibility.
#[derive(Debug)]
pub struct Stopwatch {
    enabled: bool,
    last: Instant,
    stages: BTreeMap<String, f64>,
}

impl Stopwatch {
    pub fn new(enabled: bool) -> Stopwatch {
        Stopwatch { enabled, last: Instant::now(), stages: BTreeMap::new() }
    }

    pub fn lap(&mut self, stage: &str) {
        if self.enabled {
            let now = Instant::now();
            let ms = (now - self.last).as_secs_f64() * 1e3;
            self.stages.insert(stage.to_string(), (ms * 10.0).round() / 10.0);
            self.last = now;
        }
    }

    pub fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.stages)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports always serialize");
    s.push('\n');
    s
}
