//! Boundary representations, boundary ideals, the Šilov ideal and the
//! C*-envelope.
//!
//! Everything is decided on Choi-matrix spectrahedra over the block algebra
//! `C*(E) ≅ ⊕_i M_{d_i}`. A UCP map out of the block algebra is a tuple of CP
//! maps `Φ_i: M_{d_i} → M_D`, one per block, each encoded by its Choi matrix
//! `J_i = Σ_{ab} E_ab ⊗ Φ_i(E_ab)`. For Hermitian `h` and `M`,
//! `tr(M Φ_i(x)) = tr((xᵀ ⊗ M) J_i)`, which turns `Φ(h) = T` into real linear
//! constraints on the tuple.
//!
//! Two independent routes reach the Šilov ideal:
//! * kernel intersection: a block is a boundary representation iff the UCP
//!   extension of its restriction to `E` is unique; the ideal kills the other
//!   blocks;
//! * lattice search: an ideal is a boundary ideal iff the quotient map is
//!   completely isometric on `E`, equivalently iff some UCP map `ρ` on the
//!   quotient satisfies `ρ(q(e)) = e`; the Šilov ideal is the largest one.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::choi::{
    apply_choi, choi_of_compressions, min_norm_solve, null_basis, Acceptance, Affine, ConeSearch, DykstraState,
    HermBlocks, Spectrahedron,
};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig_unchecked, op_norm, span_of_unchecked, Mat, C64};
use crate::opsys::{generated_cstar, CStarAlgebra, OperatorSystem};
use crate::rng;
use crate::sdp;
use crate::tol::Tolerances;
use crate::wedderburn::{enumerate_ideals, quotient_map, wedderburn_decompose, BlockIdeal, QuotientMap, WedderburnData};

/// Largest block count for which the ideal lattice is searched exhaustively.
pub const LATTICE_CAP: usize = 6;

const TAG_PROBE: u64 = 0xB0_0001;
const TAG_FALSIFY: u64 = 0xB0_0002;
const POLISH_EVERY: usize = 100;
const RACE_CHUNK: usize = 500;
const PEAK_ITERS: usize = 4000;
/// Dykstra iterations per probe before the direction is resolved directly.
const PROBE_BUDGET: usize = 2000;
const SDP_ITERS: usize = 80;
/// Gradient steps per falsifier start.
const ASCENT_STEPS: usize = 40;
/// Work bound (`p · t` entries) above which the peak certificate is skipped.
const PEAK_WORK_CAP: usize = 40_000_000;

/// Knobs for the randomized parts of the boundary computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub seed: u64,
    /// Random probes per uniqueness decision.
    pub uniqueness_trials: usize,
    /// Random starts for the complete-isometry falsifier.
    pub falsifier_trials: usize,
    /// Iteration cap for a single Dykstra run.
    pub dykstra_cap: usize,
    /// Probe start `J₀ + s‖J₀‖·D` for a unit null direction `D`.
    pub probe_scale: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { seed: 1, uniqueness_trials: 32, falsifier_trials: 1000, dykstra_cap: 50_000, probe_scale: 1e-3 }
    }
}

impl SearchParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn acceptance(tol: &Tolerances) -> Acceptance {
    Acceptance { residual: tol.rank, psd: tol.psd }
}

/// Real-orthonormal Hermitian basis of `M_D` (for the `Re tr(A B)` pairing).
fn herm_basis(d: usize) -> Vec<Mat> {
    let layout = HermBlocks::new(&[d]);
    (0..d * d)
        .map(|k| {
            let mut e = DVector::zeros(d * d);
            e[k] = 1.0;
            layout.block(&e, 0)
        })
        .collect()
}

/// Rows `pack(⊕_j π_j(h)ᵀ ⊗ M)` with right-hand sides `tr(M T)` for every
/// Hermitian `h` (given by its block images) and every basis element `M` of
/// `Herm(M_D)`.
fn constraint_system(layout: &HermBlocks, images: &[Vec<Mat>], targets: &[Mat], dd: usize) -> (DMatrix<f64>, DVector<f64>) {
    let hb = herm_basis(dd);
    let rows = images.len() * hb.len();
    let mut r = DMatrix::zeros(rows, layout.len());
    let mut b = DVector::zeros(rows);
    let mut row = 0;
    for (imgs, t) in images.iter().zip(targets) {
        let transposed: Vec<Mat> = imgs.iter().map(Mat::transpose).collect();
        for m in &hb {
            let blocks: Vec<Mat> = transposed.iter().map(|x| x.kron(m)).collect();
            r.set_row(row, &layout.pack(&blocks).transpose());
            b[row] = (m * t).trace().re;
            row += 1;
        }
    }
    (r, b)
}

fn check_contained(e: &OperatorSystem, w: &WedderburnData, tol: &Tolerances) -> Result<()> {
    if e.ambient() != w.ambient() {
        return Err(Error::Ambient(w.ambient(), e.ambient()));
    }
    if e.basis().iter().all(|b| w.algebra().space().contains_unchecked(b, tol.rank)) {
        Ok(())
    } else {
        Err(Error::NotContained)
    }
}

/// The set of UCP maps `Φ: C*(E) → M_{d_i}` with `Φ|_E = π_i|_E`, as a Choi
/// spectrahedron with one block of size `d_j·d_i` per source block `j`.
#[derive(Debug, Clone)]
pub struct UcpSpectrahedron {
    block: usize,
    source_dims: Vec<usize>,
    target: usize,
    spec: Spectrahedron,
    basepoint: DVector<f64>,
}

impl UcpSpectrahedron {
    pub fn block(&self) -> usize {
        self.block
    }

    pub fn source_dims(&self) -> &[usize] {
        &self.source_dims
    }

    pub fn target_dim(&self) -> usize {
        self.target
    }

    pub fn spectrahedron(&self) -> &Spectrahedron {
        &self.spec
    }

    /// Real dimension of the solution set of the affine constraints alone.
    pub fn null_dim(&self) -> usize {
        self.spec.affine.null_dim()
    }

    /// Choi tuple of `π_i` itself.
    pub fn basepoint(&self) -> Vec<Mat> {
        self.spec.layout.unpack(&self.basepoint)
    }

    /// Whether a Choi tuple lies in the spectrahedron.
    pub fn contains(&self, choi: &[Mat], tol: &Tolerances) -> bool {
        choi.len() == self.source_dims.len() && self.spec.is_feasible(&self.spec.layout.pack(choi), acceptance(tol))
    }

    /// Evaluates the map with Choi tuple `choi` at `a`, given the block images
    /// `π_j(a)`.
    pub fn apply(&self, choi: &[Mat], images: &[Mat]) -> Mat {
        let mut out = Mat::zeros(self.target, self.target);
        for ((j, x), &d) in choi.iter().zip(images).zip(&self.source_dims) {
            out = &out + &apply_choi(j, d, x);
        }
        out
    }
}

/// Builds the UCP extension spectrahedron of `π_i|_E`.
pub fn ucp_extension_set(e: &OperatorSystem, w: &WedderburnData, i: usize, tol: &Tolerances) -> Result<UcpSpectrahedron> {
    if i >= w.num_blocks() {
        return Err(Error::InvalidBlock(i));
    }
    check_contained(e, w, tol)?;
    let dims = w.block_dims();
    let dd = dims[i];
    let layout = HermBlocks::new(&dims.iter().map(|d| d * dd).collect::<Vec<_>>());
    let herm = e.space().hermitian_basis(tol);
    let images: Vec<Vec<Mat>> = herm.iter().map(|h| (0..dims.len()).map(|j| w.irrep(j, h)).collect()).collect();
    let targets: Vec<Mat> = images.iter().map(|imgs| imgs[i].clone()).collect();
    let (r, b) = constraint_system(&layout, &images, &targets, dd);
    let affine = Affine::new(&r, &b, tol.rank);
    let basepoint = layout.pack_one(i, &choi_of_compressions(dd, &[Mat::identity(dd)]));
    let spec = Spectrahedron::new(layout, affine);
    debug_assert!(spec.affine.residual(&basepoint) < 1e-8);
    Ok(UcpSpectrahedron { block: i, source_dims: dims, target: dd, spec, basepoint })
}

/// How a uniqueness decision was reached.
#[derive(Debug, Clone, PartialEq)]
pub enum UniquenessEvidence {
    /// The affine constraints alone have a single solution.
    Pinned,
    /// A positive semidefinite element of the constraint row space that
    /// vanishes exactly on the range of the basepoint; it confines every
    /// feasible point to the basepoint's face, which meets the constraint
    /// null space only at zero.
    PeakCertificate(Vec<Mat>),
    /// Every randomized probe returned to the basepoint.
    ProbesReturned(usize),
    /// The basepoint is positive definite and the constraints leave room.
    InteriorDirection,
    /// A direction inside the basepoint's face preserves all constraints.
    FaceDirection,
    /// A probe converged to a different feasible point.
    ProbeWitness { trial: usize },
}

#[derive(Debug, Clone)]
pub struct UniquenessResult {
    pub block: usize,
    pub unique: bool,
    /// A second feasible Choi tuple when `unique` is false.
    pub witness: Option<Vec<Mat>>,
    pub evidence: UniquenessEvidence,
}

fn normalized(v: DVector<f64>) -> Option<DVector<f64>> {
    let n = v.norm();
    (n > 1e-12).then(|| v / n)
}

/// Decides whether the spectrahedron is the single point `J₀`.
pub fn is_unique_ucp_extension(
    s: &UcpSpectrahedron,
    params: &SearchParams,
    tol: &Tolerances,
) -> Result<UniquenessResult> {
    let spec = &s.spec;
    let layout = &spec.layout;
    let j0 = &s.basepoint;
    let acc = acceptance(tol);
    let done = |unique, witness: Option<DVector<f64>>, evidence| UniquenessResult {
        block: s.block,
        unique,
        witness: witness.map(|x| layout.unpack(&x)),
        evidence,
    };

    if spec.affine.null_dim() == 0 {
        return Ok(done(true, None, UniquenessEvidence::Pinned));
    }

    let mut stream = rng::stream(params.seed, &[TAG_PROBE, s.block as u64]);
    let random_direction = |stream: &mut rng::Stream| -> Option<DVector<f64>> {
        let g = DVector::from_vec(rng::gauss_vec(stream, layout.len()));
        normalized(spec.affine.project_null(&g))
    };

    let eigs: Vec<_> = (0..layout.num_blocks()).map(|b| herm_eig_unchecked(&layout.block(j0, b))).collect();
    let lmax = eigs.iter().map(|e| e.max()).fold(0.0, f64::max);
    let lmin = eigs.iter().map(|e| e.min()).fold(f64::INFINITY, f64::min);

    if lmin > tol.psd {
        // Interior basepoint: any null direction stays feasible for a while.
        for _ in 0..8 {
            if let Some(d) = random_direction(&mut stream) {
                let x = j0 + d * (0.5 * lmin);
                if spec.is_feasible(&x, acc) {
                    return Ok(done(false, Some(x), UniquenessEvidence::InteriorDirection));
                }
            }
        }
        return Err(Error::Inconclusive("interior basepoint but no feasible null direction".into()));
    }

    // Face of the basepoint: ranges of its blocks.
    let cut = 1e-8 * lmax.max(f64::MIN_POSITIVE);
    let vs: Vec<Mat> = eigs.iter().map(|e| e.select(|l| l > cut)).collect();
    let ws: Vec<Mat> = eigs.iter().map(|e| e.select(|l| l <= cut)).collect();
    let face = layout.face_basis(&vs);
    let face_null = null_basis(&(spec.affine.rows() * &face), tol.rank.max(1e-10));
    if face_null.ncols() > 0 {
        let sub = HermBlocks::new(&vs.iter().map(Mat::cols).collect::<Vec<_>>());
        let z = face_null.column(0).into_owned();
        let zb = sub.unpack(&z);
        let y0: Vec<Mat> = vs.iter().enumerate().map(|(b, v)| layout.block(j0, b).compress(v)).collect();
        let y0min = y0.iter().filter(|m| m.rows() > 0).map(|m| herm_eig_unchecked(m).min()).fold(f64::INFINITY, f64::min);
        let znorm = zb.iter().map(op_norm).fold(0.0, f64::max);
        let t = 0.5 * y0min / znorm.max(f64::MIN_POSITIVE);
        let x = j0 + &face * z * t;
        if spec.is_feasible(&x, acc) && (&x - j0).norm() > tol.sep {
            return Ok(done(false, Some(x), UniquenessEvidence::FaceDirection));
        }
    } else if let Some(y) = peak_certificate(spec, &vs, &ws) {
        return Ok(done(true, None, UniquenessEvidence::PeakCertificate(layout.unpack(&y))));
    }

    // Randomized probes: Dykstra from J₀ + εD converges to the projection of
    // the start onto the spectrahedron, which is J₀ exactly when D lies in the
    // normal cone there, i.e. when max ⟨D, J − J₀⟩ over the spectrahedron is
    // zero. Near singular faces Dykstra can be sublinear; a probe that has not
    // settled within its budget is resolved by that maximization instead.
    let j0n = j0.norm();
    let budget = params.dykstra_cap.min(PROBE_BUDGET);
    for trial in 0..params.uniqueness_trials {
        let mut ts = rng::stream(params.seed, &[TAG_PROBE, s.block as u64, trial as u64 + 1]);
        let Some(d) = random_direction(&mut ts) else { continue };
        let start = j0 + &d * (params.probe_scale * j0n);
        let mut st = DykstraState::new(spec, &start);
        let found = st.run(spec, budget, POLISH_EVERY, acc, |p, it| {
            (p - j0).norm() > tol.sep || (it - j0).norm() <= tol.sep
        });
        match found {
            Some(p) if (&p - j0).norm() > tol.sep => {
                return Ok(done(false, Some(p), UniquenessEvidence::ProbeWitness { trial }));
            }
            Some(_) => continue,
            None => {}
        }
        match resolve_direction(spec, j0, &d, tol) {
            Direction::Witness(p) => {
                return Ok(done(false, Some(p), UniquenessEvidence::ProbeWitness { trial }));
            }
            Direction::Returns => {}
            Direction::Unknown => {
                return Err(Error::Inconclusive(format!(
                    "uniqueness probe {trial} for block {} did not settle (gap {:e})",
                    s.block + 1,
                    st.gap()
                )));
            }
        }
    }
    Ok(done(true, None, UniquenessEvidence::ProbesReturned(params.uniqueness_trials)))
}

enum Direction {
    Witness(DVector<f64>),
    Returns,
    Unknown,
}

/// Decides the probe direction `d` by maximizing `⟨d, J⟩` over the
/// spectrahedron. A verified feasible point more than `tol.sep` beyond `J₀`
/// along `d` is a witness. The dual iterate `y` bounds the maximum: with
/// `Z = −d − Qᵀy`, every feasible `J` has `⟨d, J⟩ ≤ −c·y − min(λ_min(Z), 0)·tr J`,
/// and `tr J` is constant because the identity lies in the row space. A bound
/// within `tol.sep` of `⟨d, J₀⟩` means the spectrahedron has no extent along
/// `d`, so the probe returns.
fn resolve_direction(spec: &Spectrahedron, j0: &DVector<f64>, d: &DVector<f64>, tol: &Tolerances) -> Direction {
    let layout = &spec.layout;
    let q = spec.affine.rows();
    let c = spec.affine.rhs();
    let g = -d;
    let r = sdp::solve(layout, q, c, &g, SDP_ITERS, 1e-11);
    let base = d.dot(j0);
    let acc = acceptance(tol);
    let candidates = [Some(r.x.clone()), spec.polish(&r.x, acc)];
    for x in candidates.into_iter().flatten() {
        if spec.is_feasible(&x, acc) && d.dot(&x) - base > tol.sep && (&x - j0).norm() > tol.sep {
            return Direction::Witness(x);
        }
    }
    let ident = layout.identity();
    if spec.affine.rowspace_residual(&ident) > 1e-9 * ident.norm() {
        return Direction::Unknown;
    }
    let zt = &g - q.transpose() * &r.y;
    let bound = -c.dot(&r.y) - layout.min_eig(&zt).min(0.0) * ident.dot(j0);
    if bound - base <= tol.sep {
        Direction::Returns
    } else {
        Direction::Unknown
    }
}

/// Searches for `Y = Qᵀy` in the constraint row space with `Y V = 0` and
/// `W* Y W ≻ 0`, where `V` spans the range of the basepoint and `W` its
/// orthogonal complement (per block).
fn peak_certificate(spec: &Spectrahedron, vs: &[Mat], ws: &[Mat]) -> Option<DVector<f64>> {
    let layout = &spec.layout;
    let q = spec.affine.rows();
    let r = q.nrows();
    let eq_rows: usize = vs.iter().map(|v| 2 * v.rows() * v.cols()).sum();
    let wdim: usize = ws.iter().map(Mat::cols).sum();
    if r == 0 || wdim == 0 {
        return None;
    }
    let mut c = DMatrix::zeros(eq_rows, r);
    for k in 0..r {
        let row = q.row(k).transpose();
        let mut idx = 0;
        for (b, v) in vs.iter().enumerate() {
            if v.cols() == 0 {
                continue;
            }
            let yv = &layout.block(&row, b) * v;
            for z in yv.data() {
                c[(idx, k)] = z.re;
                c[(idx + 1, k)] = z.im;
                idx += 2;
            }
        }
    }
    let tb = null_basis(&c, 1e-9);
    if tb.ncols() == 0 || layout.len() * tb.ncols() > PEAK_WORK_CAP {
        return None;
    }
    let basis = q.transpose() * tb;
    let a = basis.transpose() * layout.identity();
    let floor = 1e-4 / wdim as f64;
    let mut search = ConeSearch::new(basis, a, Some(ws.to_vec()), floor)?;
    let y = search.run(layout, PEAK_ITERS)?;
    // Independent check of the certificate's defining properties.
    let scale = y.norm().max(f64::MIN_POSITIVE);
    let annihilates = vs
        .iter()
        .enumerate()
        .all(|(b, v)| v.cols() == 0 || (&layout.block(&y, b) * v).max_abs() <= 1e-9 * scale);
    let psd = layout.min_eig(&y) >= -1e-10 * scale;
    let in_rows = spec.affine.rowspace_residual(&y) <= 1e-9 * scale;
    (annihilates && psd && in_rows && search.min_compressed(layout, &y) >= floor / 2.0).then_some(y)
}

/// Indices of blocks whose irreducible representation is a boundary
/// representation of `E`, with the per-block decisions.
pub fn boundary_representations(
    e: &OperatorSystem,
    w: &WedderburnData,
    params: &SearchParams,
    tol: &Tolerances,
) -> Result<(BTreeSet<usize>, Vec<UniquenessResult>)> {
    let mut reps = BTreeSet::new();
    let mut results = Vec::with_capacity(w.num_blocks());
    for i in 0..w.num_blocks() {
        let s = ucp_extension_set(e, w, i, tol)?;
        let r = is_unique_ucp_extension(&s, params, tol)?;
        if r.unique {
            reps.insert(i);
        }
        results.push(r);
    }
    Ok((reps, results))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    KernelIntersection,
    LatticeSearch,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::KernelIntersection => "kernel-intersection",
            Route::LatticeSearch => "lattice-search",
        }
    }
}

/// Evidence for a boundary-ideal decision.
#[derive(Debug, Clone, PartialEq)]
pub enum IdealCertificate {
    /// Zero ideal: Choi tuple of the re-inflation `⊕π_i(a) ↦ u*(⊕ copies)u`.
    Faithful(Vec<Mat>),
    /// Choi tuple of a UCP left inverse `ρ` with `ρ(q(e)) = e`.
    LeftInverse(Vec<Mat>),
    /// Left inverse inherited from a larger boundary ideal by discarding
    /// blocks, re-verified for this ideal.
    Inherited { from: BlockIdeal, choi: Vec<Mat> },
    /// The affine constraints are already inconsistent (residual given).
    AffineInconsistent(f64),
    /// `Y ⪰ 0` in the constraint row space with `⟨Y, x_p⟩ < 0`: every point of
    /// the affine set pairs negatively with `Y`, so none is positive.
    Separator(Vec<Mat>),
}

#[derive(Debug, Clone)]
pub struct IdealDecision {
    pub ideal: BlockIdeal,
    pub boundary: bool,
    pub certificate: IdealCertificate,
}

/// Left-inverse problem for the quotient by `ideal`: Choi blocks of size
/// `d_i·n` for each surviving block.
struct LeftInverse {
    kept: Vec<usize>,
    dims: Vec<usize>,
    images: Vec<Vec<Mat>>,
    targets: Vec<Mat>,
    n: usize,
}

impl LeftInverse {
    fn new(e: &OperatorSystem, w: &WedderburnData, ideal: &BlockIdeal) -> LeftInverse {
        let kept: Vec<usize> = (0..w.num_blocks()).filter(|i| !ideal.contains_block(*i)).collect();
        let dims: Vec<usize> = kept.iter().map(|&i| w.blocks()[i].dim).collect();
        let targets: Vec<Mat> = e.basis().to_vec();
        let images = targets.iter().map(|h| kept.iter().map(|&i| w.irrep(i, h)).collect()).collect();
        LeftInverse { kept, dims, images, targets, n: w.ambient() }
    }

    fn layout(&self) -> HermBlocks {
        HermBlocks::new(&self.dims.iter().map(|d| d * self.n).collect::<Vec<_>>())
    }

    /// Checks `ρ(q(e)) = e` on the basis of `E` and positivity of every block.
    fn verify(&self, choi: &[Mat], tol: &Tolerances) -> bool {
        if choi.len() != self.dims.len() {
            return false;
        }
        let psd = choi.iter().all(|j| j.rows() == 0 || herm_eig_unchecked(&j.hermitian_part()).min() >= -tol.psd);
        psd && self.images.iter().zip(&self.targets).all(|(imgs, t)| {
            let mut img = Mat::zeros(self.n, self.n);
            for ((j, x), &d) in choi.iter().zip(imgs).zip(&self.dims) {
                img = &img + &apply_choi(j, d, x);
            }
            img.max_abs_diff(t) <= 1e-7 * (1.0 + t.max_abs())
        })
    }
}

/// Decides whether `ideal` is a boundary ideal for `E` via a UCP left inverse
/// of the quotient map on `E`.
pub fn is_boundary_ideal_ucp(
    e: &OperatorSystem,
    w: &WedderburnData,
    ideal: &BlockIdeal,
    params: &SearchParams,
    tol: &Tolerances,
) -> Result<IdealDecision> {
    check_contained(e, w, tol)?;
    if let Some(&bad) = ideal.killed().iter().find(|&&i| i >= w.num_blocks()) {
        return Err(Error::InvalidBlock(bad));
    }
    let li = LeftInverse::new(e, w, ideal);
    let decision = |boundary, certificate| IdealDecision { ideal: ideal.clone(), boundary, certificate };

    if ideal.is_empty() {
        let choi: Vec<Mat> = (0..w.num_blocks())
            .map(|i| {
                let b = w.blocks()[i];
                let vs: Vec<Mat> = (0..b.mult).map(|c| w.isometry(i, c)).collect();
                choi_of_compressions(b.dim, &vs)
            })
            .collect();
        if li.verify(&choi, tol) {
            return Ok(decision(true, IdealCertificate::Faithful(choi)));
        }
        return Err(Error::Decomposition("re-inflation fails to invert the faithful quotient".into()));
    }

    let herm = e.space().hermitian_basis(tol);
    let layout = li.layout();
    let images: Vec<Vec<Mat>> = herm.iter().map(|h| li.kept.iter().map(|&i| w.irrep(i, h)).collect()).collect();
    let (r, b) = constraint_system(&layout, &images, &herm, li.n);
    if layout.is_empty() {
        return Ok(decision(false, IdealCertificate::AffineInconsistent(b.norm())));
    }
    let affine = Affine::new(&r, &b, tol.rank);
    if !affine.is_consistent() {
        return Ok(decision(false, IdealCertificate::AffineInconsistent(affine.inconsistency())));
    }
    let spec = Spectrahedron::new(layout, affine);
    let acc = acceptance(tol);

    // Race the primal search against the dual separator search.
    let xp = spec.affine.particular().clone();
    let mut primal = DykstraState::new(&spec, &xp);
    let c = spec.affine.rhs();
    let floor = 1e-6 / c.norm().max(1.0);
    let mut dual = ConeSearch::new(spec.affine.rows().transpose(), -c.clone(), None, floor);
    let mut spent = 0;
    while spent < params.dykstra_cap {
        let chunk = RACE_CHUNK.min(params.dykstra_cap - spent);
        if let Some(x) = primal.run(&spec, chunk, POLISH_EVERY, acc, |_, _| true) {
            let choi = spec.layout.unpack(&x);
            if li.verify(&choi, tol) {
                return Ok(decision(true, IdealCertificate::LeftInverse(choi)));
            }
        }
        if let Some(search) = dual.as_mut() {
            if let Some(y) = search.run(&spec.layout, chunk) {
                let pairing = y.dot(&xp);
                if pairing < 0.0 && spec.layout.min_eig(&y) >= 0.0 {
                    return Ok(decision(false, IdealCertificate::Separator(spec.layout.unpack(&y))));
                }
            }
        }
        spent += chunk;
    }
    Err(Error::Inconclusive(format!(
        "boundary-ideal feasibility for killed = {:?} undecided after {} iterations (gap {:e})",
        ideal.one_based(),
        spent,
        primal.gap()
    )))
}

/// Šilov ideal together with the evidence of the route that produced it.
#[derive(Debug, Clone)]
pub struct SilovResult {
    pub silov: BlockIdeal,
    pub boundary_reps: BTreeSet<usize>,
    pub route: Route,
    /// Per-block uniqueness decisions (kernel-intersection route).
    pub uniqueness: Vec<UniquenessResult>,
    /// Per-ideal decisions in enumeration order (lattice route).
    pub ideals: Vec<IdealDecision>,
}

/// Šilov ideal as the intersection of the kernels of the boundary
/// representations: it kills exactly the non-boundary blocks.
pub fn silov_ideal_dk(e: &OperatorSystem, w: &WedderburnData, params: &SearchParams, tol: &Tolerances) -> Result<SilovResult> {
    let (reps, uniqueness) = boundary_representations(e, w, params, tol)?;
    if reps.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let silov = BlockIdeal::new(w, (0..w.num_blocks()).filter(|i| !reps.contains(i)))?;
    Ok(SilovResult { silov, boundary_reps: reps, route: Route::KernelIntersection, uniqueness, ideals: Vec::new() })
}

/// Carries a left inverse for `from` over to the smaller ideal `to`: blocks
/// killed by `from` but kept by `to` get the zero map.
fn inherit(w: &WedderburnData, from: &BlockIdeal, choi: &[Mat], to: &BlockIdeal) -> Vec<Mat> {
    let n = w.ambient();
    let mut src = choi.iter();
    let mut out = Vec::new();
    for i in 0..w.num_blocks() {
        let d = w.blocks()[i].dim;
        let here = if from.contains_block(i) { None } else { src.next() };
        if !to.contains_block(i) {
            out.push(here.cloned().unwrap_or_else(|| Mat::zeros(d * n, d * n)));
        }
    }
    out
}

/// Šilov ideal as the largest boundary ideal, found by deciding every ideal
/// of the block algebra.
pub fn silov_ideal_lattice(
    e: &OperatorSystem,
    w: &WedderburnData,
    params: &SearchParams,
    tol: &Tolerances,
) -> Result<SilovResult> {
    if w.num_blocks() > LATTICE_CAP {
        return Err(Error::TooLarge(w.num_blocks(), LATTICE_CAP));
    }
    let ideals = enumerate_ideals(w);
    let mut decided: Vec<Option<IdealDecision>> = alloc::vec![None; ideals.len()];
    // Largest ideals first, so a passing ideal hands its left inverse down.
    for k in (0..ideals.len()).rev() {
        let ideal = &ideals[k];
        let mut inherited = None;
        for d in decided.iter().flatten() {
            if !(d.boundary && ideal.is_subset(&d.ideal) && ideal != &d.ideal) {
                continue;
            }
            let choi = match &d.certificate {
                IdealCertificate::LeftInverse(c) | IdealCertificate::Inherited { choi: c, .. } => c,
                _ => continue,
            };
            let cand = inherit(w, &d.ideal, choi, ideal);
            if LeftInverse::new(e, w, ideal).verify(&cand, tol) {
                inherited = Some(IdealDecision {
                    ideal: ideal.clone(),
                    boundary: true,
                    certificate: IdealCertificate::Inherited { from: d.ideal.clone(), choi: cand },
                });
                break;
            }
        }
        let decision = match inherited {
            Some(d) if !ideal.is_empty() => d,
            _ => is_boundary_ideal_ucp(e, w, ideal, params, tol)?,
        };
        decided[k] = Some(decision);
    }
    let ideals: Vec<IdealDecision> = decided.into_iter().map(|d| d.expect("every ideal decided")).collect();
    let passing: Vec<&BlockIdeal> = ideals.iter().filter(|d| d.boundary).map(|d| &d.ideal).collect();
    let maximal: Vec<&BlockIdeal> = passing
        .iter()
        .copied()
        .filter(|a| !passing.iter().any(|b| a != b && a.is_subset(b)))
        .collect();
    if maximal.len() != 1 {
        return Err(Error::NoUniqueMaximum);
    }
    let silov = maximal[0].clone();
    let boundary_reps = (0..w.num_blocks()).filter(|i| !silov.contains_block(*i)).collect();
    Ok(SilovResult { silov, boundary_reps, route: Route::LatticeSearch, uniqueness: Vec::new(), ideals })
}

/// A matrix level `m` and `x ∈ M_m(E)` (as `Σ c_k ⊗ e_k`) whose image norm
/// drops below its own.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub level: usize,
    pub x: Mat,
    pub image: Mat,
    pub norm_x: f64,
    pub norm_image: f64,
}

/// Top singular triple by power iteration on `a*a`, warm-started from `v`.
fn power_top(a: &Mat, v: &mut Vec<C64>, iters: usize) -> (f64, Vec<C64>) {
    let ah = a.adjoint();
    let apply = |m: &Mat, x: &[C64]| -> Vec<C64> {
        (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
    };
    for _ in 0..iters {
        let w = apply(&ah, &apply(a, v));
        let n = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            break;
        }
        *v = w.into_iter().map(|z| z / n).collect();
    }
    let u = apply(a, v);
    let s = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let u = if s > 0.0 { u.into_iter().map(|z| z / s).collect() } else { u };
    (s, u)
}

fn amplify(coeffs: &[Mat], basis: &[Mat]) -> Mat {
    let m = coeffs[0].rows();
    let n = basis[0].rows();
    let mut x = Mat::zeros(m * n, m * n);
    for (c, e) in coeffs.iter().zip(basis) {
        x = &x + &c.kron(e);
    }
    x
}

/// Gradient of `Re u*(Σ c_k ⊗ e_k) v` with respect to each `c_k`, as the
/// ascent direction `Σ_{rt} u_{(a,r)} conj(v_{(b,t)}) conj(e_k[r,t])`.
fn norm_gradient(u: &[C64], v: &[C64], basis: &[Mat], m: usize) -> Vec<Mat> {
    let n = basis[0].rows();
    basis
        .iter()
        .map(|e| {
            Mat::from_fn(m, m, |a, b| {
                let mut g = C64::new(0.0, 0.0);
                for r in 0..n {
                    for t in 0..n {
                        let z = e[(r, t)];
                        if z.norm_sqr() != 0.0 {
                            g += u[a * n + r] * v[b * n + t].conj() * z.conj();
                        }
                    }
                }
                g
            })
        })
        .collect()
}

/// Randomized search for a norm drop of the linear map `src_k ↦ img_k` at
/// levels `1..=level_cap`: maximizes `‖x‖ / ‖φ^{(m)}(x)‖` over `M_m(span src)`
/// by projected gradient ascent from random starts. `None` is evidence of
/// complete isometry, not proof.
pub fn falsify_map(
    src: &[Mat],
    img: &[Mat],
    level_cap: usize,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Option<Counterexample> {
    if src.is_empty() || src.len() != img.len() {
        return None;
    }
    let cap = level_cap.max(1);
    let hs = |c: &[Mat]| c.iter().map(|m| m.hs_norm().powi(2)).sum::<f64>().sqrt();
    for t in 0..trials {
        let m = 1 + t % cap;
        let mut s = rng::stream(seed, &[TAG_FALSIFY, t as u64]);
        let mut coeffs: Vec<Mat> = src.iter().map(|_| rng::gauss_mat(&mut s, m, m)).collect();
        let nrm = hs(&coeffs);
        coeffs.iter_mut().for_each(|c| *c = c.scale_re(1.0 / nrm));
        let dim_x = m * src[0].rows();
        let dim_q = m * img[0].rows();
        let mut vx: Vec<C64> = (0..dim_x).map(|_| rng::gauss_complex(&mut s)).collect();
        let mut vq: Vec<C64> = (0..dim_q).map(|_| rng::gauss_complex(&mut s)).collect();
        let eval = |coeffs: &[Mat], vx: &mut Vec<C64>, vq: &mut Vec<C64>, iters| {
            let x = amplify(coeffs, src);
            let q = amplify(coeffs, img);
            let (sx, ux) = power_top(&x, vx, iters);
            let (sq, uq) = power_top(&q, vq, iters);
            (sx, ux, sq, uq)
        };
        let (mut sx, mut ux, mut sq, mut uq) = eval(&coeffs, &mut vx, &mut vq, 30);
        let mut step = 0.5;
        // The ascent runs to a stationary point before confirming, so the
        // reported drop is the largest this start can reach.
        for _ in 0..ASCENT_STEPS {
            if sq <= 1e-12 * sx {
                break;
            }
            let gx = norm_gradient(&ux, &vx, src, m);
            let gq = norm_gradient(&uq, &vq, img, m);
            let f = sx / sq;
            let grad: Vec<Mat> = gx.iter().zip(&gq).map(|(a, b)| (a - &b.scale_re(f)).scale_re(1.0 / sq)).collect();
            let gn = hs(&grad);
            if gn < 1e-12 {
                break;
            }
            let mut improved = false;
            for _ in 0..4 {
                let mut cand: Vec<Mat> = coeffs.iter().zip(&grad).map(|(c, g)| &c.clone() + &g.scale_re(step / gn)).collect();
                let cn = hs(&cand);
                cand.iter_mut().for_each(|c| *c = c.scale_re(1.0 / cn));
                let (mut vx2, mut vq2) = (vx.clone(), vq.clone());
                let r = eval(&cand, &mut vx2, &mut vq2, 12);
                if r.2 > 0.0 && r.0 / r.2 > f {
                    coeffs = cand;
                    (sx, ux, sq, uq) = r;
                    vx = vx2;
                    vq = vq2;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if sx > 0.0 && sq < (1.0 - tol.norm) * sx {
            if let Some(cx) = confirm(&coeffs, src, img, tol) {
                return Some(cx);
            }
        }
    }
    None
}

/// Recomputes both norms exactly and reports the normalized counterexample.
fn confirm(coeffs: &[Mat], src: &[Mat], img: &[Mat], tol: &Tolerances) -> Option<Counterexample> {
    let x = amplify(coeffs, src);
    let nx = op_norm(&x);
    if nx == 0.0 {
        return None;
    }
    let x = x.scale_re(1.0 / nx);
    let scaled: Vec<Mat> = coeffs.iter().map(|c| c.scale_re(1.0 / nx)).collect();
    let image = amplify(&scaled, img);
    let nq = op_norm(&image);
    (nq < 1.0 - tol.norm).then(|| Counterexample { level: coeffs[0].rows(), x, image, norm_x: 1.0, norm_image: nq })
}

/// Falsifier for `q|_E` being completely isometric, with the level capped at
/// the size of the quotient's target.
pub fn falsify_complete_isometry(
    e: &OperatorSystem,
    q: &QuotientMap,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Option<Counterexample> {
    let images: Vec<Mat> = e.basis().iter().map(|b| q.apply(b)).collect();
    if q.target_dim() == 0 {
        // Everything maps to zero; the unit already drops to norm zero.
        let n = e.ambient();
        let x = Mat::identity(n);
        return Some(Counterexample { level: 1, x, image: Mat::zeros(0, 0), norm_x: 1.0, norm_image: 0.0 });
    }
    falsify_map(e.basis(), &images, q.target_dim(), trials, seed, tol)
}

/// The C*-envelope `C*(E)/I` for the Šilov ideal `I`, realized block
/// diagonally in `M_{Σ d_i}` over the surviving blocks.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub algebra: WedderburnData,
    pub silov: SilovResult,
    pub quotient: QuotientMap,
    /// Block-diagonal realization of the envelope, blocks in surviving order.
    pub envelope: WedderburnData,
    /// `i_E(E)`, the image of `E` in the envelope.
    pub embedded: OperatorSystem,
    /// Falsifier result on the embedding (expected `None`).
    pub falsifier: Option<Counterexample>,
}

impl Envelope {
    /// `(d, m)` pairs of the envelope's blocks.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        self.envelope.blocks().iter().map(|b| (b.dim, b.mult)).collect()
    }

    pub fn dim(&self) -> usize {
        self.envelope.algebra().dim()
    }
}

/// Block-diagonal algebra `⊕ M_{d_i}` inside `M_{Σ d_i}` with its canonical
/// Wedderburn data.
pub fn block_algebra(dims: &[usize]) -> WedderburnData {
    let n: usize = dims.iter().sum();
    let mut basis = Vec::new();
    let mut isometries = Vec::new();
    let mut off = 0;
    for &d in dims {
        for a in 0..d {
            for b in 0..d {
                basis.push(Mat::unit(n, off + a, off + b));
            }
        }
        isometries.push(alloc::vec![Mat::from_fn(n, d, |i, j| C64::new(if i == off + j { 1.0 } else { 0.0 }, 0.0))]);
        off += d;
    }
    let space = span_of_unchecked(&basis, n, 1e-12);
    WedderburnData::assemble(CStarAlgebra::from_parts(space, true), isometries)
}

/// Assembles the envelope for a given Šilov ideal.
pub fn envelope_from(
    e: &OperatorSystem,
    w: WedderburnData,
    silov: SilovResult,
    params: &SearchParams,
    tol: &Tolerances,
) -> Result<Envelope> {
    let q = quotient_map(&w, &silov.silov)?;
    let target = block_algebra(&q.kept_dims());
    let images: Vec<Mat> = e.basis().iter().map(|b| q.apply(b)).collect();
    let space = span_of_unchecked(&images, q.target_dim(), tol.rank);
    let label = format!("i({})", e.label());
    let embedded = OperatorSystem::from_subspace(space, label, tol)?;
    let falsifier = falsify_complete_isometry(e, &q, params.falsifier_trials, params.seed, tol);
    Ok(Envelope { algebra: w, silov, quotient: q, envelope: target, embedded, falsifier })
}

/// C*-envelope via `C*(E)` and the kernel-intersection Šilov ideal.
pub fn cstar_envelope(e: &OperatorSystem, params: &SearchParams, tol: &Tolerances) -> Result<Envelope> {
    let a = generated_cstar(e, tol)?;
    let w = wedderburn_decompose(&a, params.seed, tol)?;
    let silov = silov_ideal_dk(e, &w, params, tol)?;
    envelope_from(e, w, silov, params, tol)
}

/// Solves `Φ(h) = T` in least squares over Choi tuples without positivity;
/// used by tests to cross-check constraint assembly.
#[doc(hidden)]
pub fn unconstrained_choi(s: &UcpSpectrahedron) -> Vec<Mat> {
    let x = min_norm_solve(s.spec.affine.rows(), s.spec.affine.rhs());
    s.spec.layout.unpack(&x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opsys::opsys_from_generators;

    fn x() -> Mat {
        Mat::unit(2, 0, 1)
    }

    fn setup(n: usize, gens: &[Mat]) -> (OperatorSystem, WedderburnData, Tolerances) {
        let t = Tolerances::default();
        let e = opsys_from_generators(n, gens, &t).unwrap();
        let a = generated_cstar(&e, &t).unwrap();
        let w = wedderburn_decompose(&a, 1, &t).unwrap();
        (e, w, t)
    }

    fn state_sum() -> (OperatorSystem, WedderburnData, Tolerances) {
        setup(3, &[Mat::direct_sum(&[x(), Mat::diag_real(&[0.5])])])
    }

    #[test]
    fn extension_set_shapes() {
        let (e, w, t) = setup(2, &[x(), Mat::unit(2, 0, 0)]);
        let s = ucp_extension_set(&e, &w, 0, &t).unwrap();
        assert_eq!(s.null_dim(), 0);
        let (e, w, t) = setup(2, &[x()]);
        let s = ucp_extension_set(&e, &w, 0, &t).unwrap();
        // 16 real Choi parameters, 3·4 real constraints.
        assert_eq!(s.null_dim(), 4);
        assert!(s.contains(&s.basepoint(), &t));
    }

    #[test]
    fn state_sum_second_state() {
        let (e, w, t) = state_sum();
        assert_eq!(w.block_dims(), [2, 1]);
        let s = ucp_extension_set(&e, &w, 1, &t).unwrap();
        // The vector state at (1,1)/√2 on the M_2 block, zero on the C block.
        let v = Mat::from_real(2, 1, &[core::f64::consts::FRAC_1_SQRT_2; 2]);
        let u = w.isometry(0, 0);
        // Express the state in the block's own coordinates.
        let vb = &u.adjoint() * &Mat::direct_sum(&[v, Mat::zeros(1, 0)]);
        let j1 = choi_of_compressions(2, &[vb.adjoint()]);
        let witness = alloc::vec![j1, Mat::zeros(1, 1)];
        assert!(s.contains(&witness, &t));
    }

    #[test]
    fn uniqueness_examples() {
        let p = SearchParams::default();
        let (e, w, t) = setup(2, &[x(), Mat::unit(2, 0, 0)]);
        let r = is_unique_ucp_extension(&ucp_extension_set(&e, &w, 0, &t).unwrap(), &p, &t).unwrap();
        assert!(r.unique);
        assert_eq!(r.evidence, UniquenessEvidence::Pinned);

        let (e, w, t) = setup(2, &[x()]);
        let r = is_unique_ucp_extension(&ucp_extension_set(&e, &w, 0, &t).unwrap(), &p, &t).unwrap();
        assert!(r.unique, "{:?}", r.evidence);

        let (e, w, t) = state_sum();
        let s = ucp_extension_set(&e, &w, 1, &t).unwrap();
        let r = is_unique_ucp_extension(&s, &p, &t).unwrap();
        assert!(!r.unique);
        let wit = r.witness.unwrap();
        assert!(s.contains(&wit, &t));
        let r0 = is_unique_ucp_extension(&ucp_extension_set(&e, &w, 0, &t).unwrap(), &p, &t).unwrap();
        assert!(r0.unique, "{:?}", r0.evidence);
    }

    #[test]
    fn boundary_ideal_examples() {
        let p = SearchParams::default();
        let (e, w, t) = state_sum();
        let d = is_boundary_ideal_ucp(&e, &w, &BlockIdeal::zero(), &p, &t).unwrap();
        assert!(d.boundary);
        let d = is_boundary_ideal_ucp(&e, &w, &BlockIdeal::new(&w, [1]).unwrap(), &p, &t).unwrap();
        assert!(d.boundary, "{:?}", d.certificate);
        let d = is_boundary_ideal_ucp(&e, &w, &BlockIdeal::new(&w, [0]).unwrap(), &p, &t).unwrap();
        assert!(!d.boundary);
        let d = is_boundary_ideal_ucp(&e, &w, &BlockIdeal::new(&w, [0, 1]).unwrap(), &p, &t).unwrap();
        assert!(!d.boundary);
    }

    #[test]
    fn silov_routes_agree_on_state_sum() {
        let p = SearchParams::default();
        let (e, w, t) = state_sum();
        let dk = silov_ideal_dk(&e, &w, &p, &t).unwrap();
        let lat = silov_ideal_lattice(&e, &w, &p, &t).unwrap();
        assert_eq!(dk.silov.one_based(), [2]);
        assert_eq!(lat.silov, dk.silov);
    }

    #[test]
    fn falsifier_calibration() {
        let (e, w, t) = state_sum();
        let q1 = quotient_map(&w, &BlockIdeal::new(&w, [0]).unwrap()).unwrap();
        let cx = falsify_complete_isometry(&e, &q1, 1000, 1, &t).unwrap();
        assert!(cx.norm_image <= 0.5 + 1e-9);
        let q2 = quotient_map(&w, &BlockIdeal::new(&w, [1]).unwrap()).unwrap();
        assert!(falsify_complete_isometry(&e, &q2, 200, 1, &t).is_none());
    }

    #[test]
    fn envelope_of_state_sum() {
        let (e, _, t) = state_sum();
        let env = cstar_envelope(&e, &SearchParams::default(), &t).unwrap();
        assert_eq!(env.blocks(), [(2, 1)]);
        assert!(env.falsifier.is_none());
        let g = Mat::direct_sum(&[x(), Mat::diag_real(&[0.5])]);
        let img = env.quotient.apply(&g);
        assert!((op_norm(&img) - 1.0).abs() < 1e-12);
        assert!(img[(0, 0)].norm() < 1e-12 && img[(1, 1)].norm() < 1e-12);
    }
}
