//! `silov tensor`: the tensor-product checks for a pair of systems.

use std::collections::BTreeMap;

use serde::Serialize;
use silov_core::propagation::{propagation_in, verify_power_tensor, PropMaxReport};
use silov_core::boundary::ucp_extension_set;
use silov_core::tensor::{hopenwasser_pairs, pair_index, verify_main_theorem, MainTheoremReport};
use silov_core::{BlockIdeal, OperatorSystem};

use crate::analyze::PropagationInfo;
use crate::report::{CounterexampleInfo, InputInfo, Status, Stopwatch, UniquenessEntry, SCHEMA, VERSION};
use crate::settings::{CliError, Outcome, Settings};
use crate::spec::LoadedSpec;

#[derive(Debug, Clone, Serialize)]
pub struct FactorInfo {
    pub name: String,
    pub blocks: Vec<[usize; 2]>,
    pub silov_killed: Vec<usize>,
    pub boundary_reps: Vec<usize>,
    pub envelope_blocks: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductBlock {
    /// 1-based factor blocks `(i, j)`.
    pub pair: [usize; 2],
    pub d: usize,
    pub m: usize,
    /// 1-based block of the independent decomposition it matched.
    pub direct: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductInfo {
    pub ambient_dim: usize,
    pub dim: usize,
    pub cstar_dim: usize,
    pub algebra_equal: bool,
    pub blocks: Vec<ProductBlock>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MainTheoremInfo {
    /// Killed product blocks as 1-based pairs.
    pub silov_kernel_intersection: Vec<[usize; 2]>,
    pub silov_lattice: Option<Vec<[usize; 2]>>,
    pub routes_agree: bool,
    pub expected: Vec<[usize; 2]>,
    pub contained: bool,
    pub equal: bool,
    pub falsifier: Option<CounterexampleInfo>,
    pub envelope_blocks: Vec<usize>,
    pub expected_envelope_blocks: Vec<usize>,
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopenwasserInfo {
    pub pairs: Vec<HopenwasserPair>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopenwasserPair {
    pub pair: [usize; 2],
    #[serde(flatten)]
    pub decision: UniquenessEntry,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerStep {
    pub n: usize,
    pub tensor_of_powers: usize,
    pub power_of_tensor: usize,
    pub equal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerTensorInfo {
    pub n_max: usize,
    pub steps: Vec<PowerStep>,
    pub passed: bool,
    pub first_failure: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropMaxInfo {
    pub left: PropagationInfo,
    pub right: PropagationInfo,
    pub product: PropagationInfo,
    pub expected: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorReport {
    pub schema: String,
    pub kind: String,
    pub version: String,
    pub inputs: Vec<InputInfo>,
    pub settings: Settings,
    pub status: Status,
    pub factors: Vec<FactorInfo>,
    pub product: Option<ProductInfo>,
    pub main_theorem: Option<MainTheoremInfo>,
    pub hopenwasser: Option<HopenwasserInfo>,
    pub power_tensor: Option<PowerTensorInfo>,
    pub prop_max: Option<PropMaxInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, f64>>,
}

impl TensorReport {
    pub fn outcome(&self) -> Outcome {
        self.status.outcome
    }
}

fn input(l: &LoadedSpec) -> InputInfo {
    InputInfo { name: l.spec.name.clone(), file: l.file.clone(), sha256: l.sha256.clone() }
}

fn labelled(ideal: &BlockIdeal, nb: usize) -> Vec<[usize; 2]> {
    ideal.killed().iter().map(|k| [k / nb + 1, k % nb + 1]).collect()
}

fn factor(name: &str, env: &silov_core::boundary::Envelope) -> FactorInfo {
    FactorInfo {
        name: name.to_string(),
        blocks: env.algebra.blocks().iter().map(|b| [b.dim, b.mult]).collect(),
        silov_killed: env.silov.silov.one_based(),
        boundary_reps: env.silov.boundary_reps.iter().map(|i| i + 1).collect(),
        envelope_blocks: env.blocks().iter().map(|&(d, m)| [d, m]).collect(),
    }
}

fn main_info(m: &MainTheoremReport, nb: usize) -> MainTheoremInfo {
    MainTheoremInfo {
        silov_kernel_intersection: labelled(&m.direct.silov, nb),
        silov_lattice: m.lattice.as_ref().map(|l| labelled(&l.silov, nb)),
        routes_agree: m.routes_agree(),
        expected: labelled(&m.expected, nb),
        contained: m.contained,
        equal: m.direct.silov == m.expected,
        falsifier: m.falsifier.as_ref().map(CounterexampleInfo::from),
        envelope_blocks: m.envelope_blocks.clone(),
        expected_envelope_blocks: m.expected_envelope_blocks.clone(),
        passed: m.passed(),
        failures: m.failures.clone(),
    }
}

/// Runs every tensor check on the pair. Numerical trouble is recorded in
/// the report's status.
pub fn tensor(left: &LoadedSpec, right: &LoadedSpec, settings: &Settings, timing: bool) -> TensorReport {
    let mut report = TensorReport {
        schema: SCHEMA.into(),
        kind: "tensor".into(),
        version: VERSION.into(),
        inputs: vec![input(left), input(right)],
        settings: settings.clone(),
        status: Status::default(),
        factors: Vec::new(),
        product: None,
        main_theorem: None,
        hopenwasser: None,
        power_tensor: None,
        prop_max: None,
        timing_ms: None,
    };
    let mut clock = Stopwatch::new(timing);
    if let Err(e) = run(left, right, settings, &mut report, &mut clock) {
        report.status.record_error(&e);
    }
    report.timing_ms = clock.finish();
    report
}

fn build(l: &LoadedSpec, settings: &Settings) -> Result<OperatorSystem, CliError> {
    l.spec.to_system(&settings.tol()).map_err(|e| CliError::core(&format!("{}: building the operator system", l.file), &e))
}

fn run(left: &LoadedSpec, right: &LoadedSpec, settings: &Settings, report: &mut TensorReport, clock: &mut Stopwatch) -> Result<(), CliError> {
    let tol = settings.tol();
    let params = settings.params();
    let e = build(left, settings)?;
    let f = build(right, settings)?;
    let n = e.ambient() * f.ambient();
    if n > settings.max_ambient_product {
        return Err(CliError::input(format!(
            "product ambient dimension {n} exceeds --max-ambient-product {}",
            settings.max_ambient_product
        )));
    }

    let m = verify_main_theorem(&e, &f, &params, &tol, settings.max_ambient_product).map_err(|x| CliError::core("main theorem", &x))?;
    clock.lap("main_theorem");
    let nb = m.right.algebra.num_blocks();
    report.factors = vec![factor(&left.spec.name, &m.left), factor(&right.spec.name, &m.right)];
    report.product = Some(ProductInfo {
        ambient_dim: n,
        dim: m.system.product.dim(),
        cstar_dim: m.product.algebra().dim(),
        algebra_equal: m.product_check.algebra_equal,
        blocks: m
            .product
            .blocks()
            .iter()
            .enumerate()
            .map(|(k, b)| ProductBlock { pair: [k / nb + 1, k % nb + 1], d: b.dim, m: b.mult, direct: m.product_check.matching[k] + 1 })
            .collect(),
    });
    let info = main_info(&m, nb);
    for f in &info.failures {
        report.status.record(Outcome::Failure, format!("main theorem: {f}"));
    }
    report.main_theorem = Some(info);

    let hop = hopenwasser_pairs(
        &e,
        &m.left.algebra,
        m.left.silov.boundary_reps.clone(),
        &f,
        &m.right.algebra,
        m.right.silov.boundary_reps.clone(),
        &params,
        &tol,
    )
    .map_err(|x| CliError::core("boundary representations of the product", &x))?;
    clock.lap("hopenwasser");
    let hinfo = HopenwasserInfo {
        pairs: hop
            .pairs
            .iter()
            .map(|((i, j), r)| {
                let basepoint = ucp_extension_set(&m.system.product, &m.product, pair_index(*i, *j, nb), &tol)
                    .map(|s| s.basepoint())
                    .unwrap_or_default();
                HopenwasserPair { pair: [i + 1, j + 1], decision: UniquenessEntry::new(r, &basepoint) }
            })
            .collect(),
        passed: hop.passed(),
    };
    for p in hinfo.pairs.iter().filter(|p| !p.decision.unique) {
        report.status.record(
            Outcome::Failure,
            format!("tensor of boundary representations {:?} has a second UCP extension", p.pair),
        );
    }
    report.hopenwasser = Some(hinfo);

    let pl = propagation_in(&e, &m.left, &tol).map_err(|x| CliError::core("propagation number of the left factor", &x))?;
    let pr = propagation_in(&f, &m.right, &tol).map_err(|x| CliError::core("propagation number of the right factor", &x))?;
    let pp = propagation_in(&m.system.product, &m.envelope, &tol).map_err(|x| CliError::core("propagation number of the product", &x))?;
    let pm = PropMaxReport { left: pl, right: pr, product: pp };
    if !pm.passed() {
        report.status.record(Outcome::Failure, format!("propagation: {}", pm.describe()));
    }
    report.prop_max = Some(PropMaxInfo {
        left: (&pm.left).into(),
        right: (&pm.right).into(),
        product: (&pm.product).into(),
        expected: pm.expected(),
        passed: pm.passed(),
    });
    clock.lap("propagation");

    let n_max = pm.expected() + 1;
    let pt = verify_power_tensor(&e, &f, n_max, &tol).map_err(|x| CliError::core("power-tensor check", &x))?;
    if let Some(k) = pt.first_failure() {
        report.status.record(Outcome::Failure, format!("power-tensor: spans differ at n = {k}"));
    }
    report.power_tensor = Some(PowerTensorInfo {
        n_max,
        steps: pt
            .steps
            .iter()
            .map(|s| PowerStep { n: s.n, tensor_of_powers: s.tensor_of_powers, power_of_tensor: s.power_of_tensor, equal: s.equal })
            .collect(),
        passed: pt.passed(),
        first_failure: pt.first_failure(),
    });
    clock.lap("power_tensor");
    Ok(())
}
