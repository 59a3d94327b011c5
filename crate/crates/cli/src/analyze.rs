//! `silov analyze`: decomposition, Šilov ideal by both routes, envelope and
//! propagation number of a single system.

use std::collections::BTreeMap;

use serde::Serialize;
use silov_core::boundary::{envelope_from, silov_ideal_dk, silov_ideal_lattice, Envelope, SilovResult, LATTICE_CAP};
use silov_core::opsys::generated_cstar;
use silov_core::propagation::{propagation_in, PropResult};
use silov_core::wedderburn::wedderburn_decompose;
use silov_core::{OperatorSystem, WedderburnData};

use crate::report::{CounterexampleInfo, IdealEntry, InputInfo, Status, Stopwatch, UniquenessEntry, SCHEMA, VERSION};
use crate::settings::{CliError, Outcome, Settings};
use crate::spec::LoadedSpec;

#[derive(Debug, Clone, Serialize)]
pub struct SilovKilled {
    pub kernel_intersection: Option<Vec<usize>>,
    /// `None` when the lattice route was skipped or failed.
    pub lattice: Option<Vec<usize>>,
    /// `None` unless both routes produced an answer.
    pub agree: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagationInfo {
    pub value: usize,
    pub chain: Vec<usize>,
    pub envelope_dim: usize,
    /// Power chain of `E` inside `C*(E)`. Non-normative.
    pub cstar_chain: Vec<usize>,
}

impl From<&PropResult> for PropagationInfo {
    fn from(p: &PropResult) -> Self {
        PropagationInfo { value: p.value, chain: p.chain.clone(), envelope_dim: p.envelope_dim, cstar_chain: p.cstar_chain.clone() }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Certificates {
    pub uniqueness: Vec<UniquenessEntry>,
    pub ideals: Vec<IdealEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub kind: String,
    pub version: String,
    pub input: InputInfo,
    pub settings: Settings,
    pub status: Status,
    pub dim: Option<usize>,
    pub ambient_dim: usize,
    pub cstar_dim: Option<usize>,
    /// `(d, m)` per block of `C*(E)` in block order, largest `d` first.
    pub blocks: Vec<[usize; 2]>,
    /// Blocks (1-based) whose representation is a boundary representation.
    pub boundary_reps: Vec<usize>,
    pub silov_killed: SilovKilled,
    pub envelope_blocks: Vec<[usize; 2]>,
    pub propagation: Option<PropagationInfo>,
    /// `None` when the embedding into the envelope survived every trial.
    pub falsifier: Option<CounterexampleInfo>,
    pub certificates: Certificates,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, f64>>,
}

impl AnalysisReport {
    pub fn outcome(&self) -> Outcome {
        self.status.outcome
    }
}

/// Everything computed on the way, for callers that want more than the
/// report.
pub struct Analysis {
    pub report: AnalysisReport,
    pub system: Option<OperatorSystem>,
    pub envelope: Option<Envelope>,
}

fn pairs(v: &[(usize, usize)]) -> Vec<[usize; 2]> {
    v.iter().map(|&(d, m)| [d, m]).collect()
}

fn uniqueness_entries(e: &OperatorSystem, w: &WedderburnData, s: &SilovResult, settings: &Settings) -> Vec<UniquenessEntry> {
    let tol = settings.tol();
    s.uniqueness
        .iter()
        .map(|r| {
            let basepoint = silov_core::boundary::ucp_extension_set(e, w, r.block, &tol).map(|x| x.basepoint()).unwrap_or_default();
            UniquenessEntry::new(r, &basepoint)
        })
        .collect()
}

/// Runs the single-system pipeline. Numerical trouble is recorded in the
/// report's status rather than returned.
pub fn analyze(loaded: &LoadedSpec, settings: &Settings, timing: bool) -> Analysis {
    let spec = &loaded.spec;
    let mut report = AnalysisReport {
        schema: SCHEMA.into(),
        kind: "analysis".into(),
        version: VERSION.into(),
        input: InputInfo { name: spec.name.clone(), file: loaded.file.clone(), sha256: loaded.sha256.clone() },
        settings: settings.clone(),
        status: Status::default(),
        dim: None,
        ambient_dim: spec.ambient_dim,
        cstar_dim: None,
        blocks: Vec::new(),
        boundary_reps: Vec::new(),
        silov_killed: SilovKilled { kernel_intersection: None, lattice: None, agree: None },
        envelope_blocks: Vec::new(),
        propagation: None,
        falsifier: None,
        certificates: Certificates::default(),
        timing_ms: None,
    };
    let mut clock = Stopwatch::new(timing);
    let (system, envelope) = match run(spec_system(loaded, settings), &mut report, settings, &mut clock) {
        Ok(parts) => parts,
        Err((e, system)) => {
            report.status.record_error(&e);
            (system, None)
        }
    };
    report.timing_ms = clock.finish();
    Analysis { report, system, envelope }
}

fn spec_system(loaded: &LoadedSpec, settings: &Settings) -> Result<OperatorSystem, CliError> {
    loaded
        .spec
        .to_system(&settings.tol())
        .map_err(|e| CliError::core(&format!("{}: building the operator system", loaded.file), &e))
}

type Failed = (CliError, Option<OperatorSystem>);

fn run(
    system: Result<OperatorSystem, CliError>,
    report: &mut AnalysisReport,
    settings: &Settings,
    clock: &mut Stopwatch,
) -> Result<(Option<OperatorSystem>, Option<Envelope>), Failed> {
    let e = system.map_err(|err| (err, None))?;
    let tol = settings.tol();
    let params = settings.params();
    let fail = |ctx: &str, err: silov_core::Error, e: &OperatorSystem| (CliError::core(ctx, &err), Some(e.clone()));
    report.dim = Some(e.dim());

    let a = generated_cstar(&e, &tol).map_err(|x| fail("generating C*(E)", x, &e))?;
    report.cstar_dim = Some(a.dim());
    let w = wedderburn_decompose(&a, params.seed, &tol).map_err(|x| fail("Wedderburn decomposition", x, &e))?;
    w.verify(&tol).map_err(|x| fail("Wedderburn decomposition", x, &e))?;
    report.blocks = w.blocks().iter().map(|b| [b.dim, b.mult]).collect();
    clock.lap("decompose");

    let dk = silov_ideal_dk(&e, &w, &params, &tol);
    clock.lap("kernel_intersection");
    let lattice = if w.num_blocks() <= LATTICE_CAP {
        Some(silov_ideal_lattice(&e, &w, &params, &tol))
    } else {
        report.status.messages.push(format!("lattice route skipped: {} blocks exceed the cap of {LATTICE_CAP}", w.num_blocks()));
        None
    };
    clock.lap("lattice");

    if let Ok(d) = &dk {
        report.silov_killed.kernel_intersection = Some(d.silov.one_based());
        report.boundary_reps = d.boundary_reps.iter().map(|i| i + 1).collect();
        report.certificates.uniqueness = uniqueness_entries(&e, &w, d, settings);
    }
    if let Some(Ok(l)) = &lattice {
        report.silov_killed.lattice = Some(l.silov.one_based());
        report.certificates.ideals = l.ideals.iter().map(IdealEntry::from).collect();
    }
    if let Some(Err(x)) = &lattice {
        report.status.record_error(&CliError::core("lattice route", x));
    }
    let dk = dk.map_err(|x| fail("kernel-intersection route", x, &e))?;
    if let Some(Ok(l)) = &lattice {
        let agree = l.silov == dk.silov;
        report.silov_killed.agree = Some(agree);
        if !agree {
            report.status.record(
                Outcome::Failure,
                format!("Šilov routes disagree: kernel intersection {:?}, lattice {:?}", dk.silov.one_based(), l.silov.one_based()),
            );
        }
    }

    let env = envelope_from(&e, w, dk, &params, &tol).map_err(|x| fail("envelope", x, &e))?;
    report.envelope_blocks = pairs(&env.blocks());
    if let Some(cx) = &env.falsifier {
        report.falsifier = Some(cx.into());
        report.status.record(
            Outcome::Failure,
            format!("quotient by the Šilov ideal is not completely isometric: level {} norm {:.6} -> {:.6}", cx.level, cx.norm_x, cx.norm_image),
        );
    }
    clock.lap("envelope");
    let prop = propagation_in(&e, &env, &tol).map_err(|x| fail("propagation number", x, &e))?;
    report.propagation = Some((&prop).into());
    clock.lap("propagation");
    Ok((Some(e), Some(env)))
}
