//! Minimal tensor products of operator systems, algebras, ideals and maps,
//! and the checks that tie the Šilov ideal of `E ⊗min F` to those of the
//! factors.
//!
//! Everything is spatial: `E ⊗min F` is the span of `kron(e, f)` inside
//! `M_{nm}`, and the product of block algebras has blocks indexed by pairs
//! `(i, j)`, flattened as `i·n_B + j`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::boundary::{
    boundary_representations, envelope_from, falsify_complete_isometry, is_unique_ucp_extension, silov_ideal_dk,
    silov_ideal_lattice, ucp_extension_set, Counterexample, Envelope, SearchParams, SilovResult, UniquenessResult,
    LATTICE_CAP,
};
use crate::error::{Error, Result};
use crate::linalg::{op_norm, span_of_unchecked, Mat, MatSubspace, C64};
use crate::opsys::{generated_cstar, CStarAlgebra, OperatorSystem};
use crate::tol::Tolerances;
use crate::wedderburn::{quotient_map, wedderburn_decompose, BlockIdeal, WedderburnData};

/// Default cap on the product ambient `n·m` for the full theorem check.
pub const DEFAULT_AMBIENT_CAP: usize = 36;

#[derive(Debug, Clone)]
pub struct TensorSystem {
    pub left: OperatorSystem,
    pub right: OperatorSystem,
    pub product: OperatorSystem,
}

pub(crate) fn kron_span(a: &[Mat], b: &[Mat], ambient: usize, tol: &Tolerances) -> MatSubspace {
    let mut prods = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            prods.push(x.kron(y));
        }
    }
    span_of_unchecked(&prods, ambient, tol.rank)
}

/// `E ⊗min F = span{kron(e, f)} ⊆ M_{nm}`.
pub fn min_tensor(e: &OperatorSystem, f: &OperatorSystem, tol: &Tolerances) -> Result<TensorSystem> {
    let n = e.ambient() * f.ambient();
    let space = kron_span(e.basis(), f.basis(), n, tol);
    let label = format!("{} (x) {}", e.label(), f.label());
    let product = OperatorSystem::from_subspace(space, label, tol)?;
    Ok(TensorSystem { left: e.clone(), right: f.clone(), product })
}

/// `A ⊗min B` for concrete algebras; again a unital *-algebra.
pub fn min_tensor_algebra(a: &CStarAlgebra, b: &CStarAlgebra, tol: &Tolerances) -> CStarAlgebra {
    let n = a.ambient() * b.ambient();
    CStarAlgebra::from_parts(kron_span(a.basis(), b.basis(), n, tol), a.is_unital() && b.is_unital())
}

/// A linear map given by its values on the orthonormal basis of its domain.
#[derive(Debug, Clone)]
pub struct LinearMap {
    domain: MatSubspace,
    images: Vec<Mat>,
    target: usize,
}

impl LinearMap {
    pub fn new(domain: MatSubspace, images: Vec<Mat>, target: usize) -> Result<LinearMap> {
        if images.len() != domain.dim() {
            return Err(Error::Shape(format!("{} images for a {}-dimensional domain", images.len(), domain.dim())));
        }
        if let Some(m) = images.iter().find(|m| m.rows() != target || m.cols() != target) {
            return Err(Error::Ambient(target, m.rows()));
        }
        Ok(LinearMap { domain, images, target })
    }

    /// Restriction of `f` to `domain`.
    pub fn from_fn(domain: &MatSubspace, target: usize, f: impl Fn(&Mat) -> Mat) -> LinearMap {
        let images = domain.basis().iter().map(f).collect();
        LinearMap { domain: domain.clone(), images, target }
    }

    pub fn identity(domain: &MatSubspace) -> LinearMap {
        LinearMap::from_fn(domain, domain.ambient(), Mat::clone)
    }

    pub fn domain(&self) -> &MatSubspace {
        &self.domain
    }

    pub fn images(&self) -> &[Mat] {
        &self.images
    }

    pub fn target_dim(&self) -> usize {
        self.target
    }

    /// Evaluates the map on the projection of `x` onto the domain.
    pub fn apply(&self, x: &Mat) -> Mat {
        let mut out = Mat::zeros(self.target, self.target);
        for (c, img) in self.domain.coords(x).into_iter().zip(&self.images) {
            out.axpy(c, img);
        }
        out
    }

    /// The kernel as a subspace of the domain.
    pub fn kernel(&self, tol: &Tolerances) -> MatSubspace {
        let t2 = self.target * self.target;
        let mut sys = Mat::zeros(t2.max(1), self.domain.dim());
        for (k, img) in self.images.iter().enumerate() {
            for (r, z) in img.data().iter().enumerate() {
                sys[(r, k)] = *z;
            }
        }
        let coords = crate::linalg::null_space(&sys, tol.rank);
        let mats: Vec<Mat> = coords.iter().map(|c| self.domain.from_coords(c)).collect();
        span_of_unchecked(&mats, self.domain.ambient(), tol.rank)
    }
}

/// `φ ⊗ ψ`, determined by `kron(v, w) ↦ kron(φ v, ψ w)` on basis pairs.
pub fn tensor_map(phi: &LinearMap, psi: &LinearMap, tol: &Tolerances) -> LinearMap {
    let n = phi.domain.ambient() * psi.domain.ambient();
    let mut pairs = Vec::with_capacity(phi.images.len() * psi.images.len());
    let mut krons = Vec::with_capacity(pairs.capacity());
    for (v, pv) in phi.domain.basis().iter().zip(&phi.images) {
        for (w, pw) in psi.domain.basis().iter().zip(&psi.images) {
            krons.push(v.kron(w));
            pairs.push(pv.kron(pw));
        }
    }
    let domain = span_of_unchecked(&krons, n, tol.rank);
    let target = phi.target * psi.target;
    // Kronecker products of orthonormal bases are orthonormal, so the
    // coordinates of a domain basis element in `krons` are inner products.
    let images = domain
        .basis()
        .iter()
        .map(|b| {
            let mut out = Mat::zeros(target, target);
            for (k, img) in krons.iter().zip(&pairs) {
                out.axpy(k.hs_dot(b), img);
            }
            out
        })
        .collect();
    LinearMap { domain, images, target }
}

/// Quotient map `A → A/I` as a [`LinearMap`] on the algebra.
pub fn quotient_linear_map(w: &WedderburnData, ideal: &BlockIdeal) -> Result<LinearMap> {
    let q = quotient_map(w, ideal)?;
    Ok(LinearMap::from_fn(w.algebra().space(), q.target_dim(), |a| q.apply(a)))
}

/// Wedderburn data of `A ⊗min B` assembled from the factors: block `(i, j)`
/// has size `d_i·d'_j`, copies `kron(V_is, W_jt)` with `(s, t)` in
/// lexicographic order, and blocks in pair-lexicographic order.
pub fn product_blocks(wa: &WedderburnData, wb: &WedderburnData, tol: &Tolerances) -> WedderburnData {
    let alg = min_tensor_algebra(wa.algebra(), wb.algebra(), tol);
    let mut isometries = Vec::with_capacity(wa.num_blocks() * wb.num_blocks());
    for (i, ba) in wa.blocks().iter().enumerate() {
        for (j, bb) in wb.blocks().iter().enumerate() {
            let mut copies = Vec::with_capacity(ba.mult * bb.mult);
            for s in 0..ba.mult {
                let v = wa.isometry(i, s);
                for t in 0..bb.mult {
                    copies.push(v.kron(&wb.isometry(j, t)));
                }
            }
            isometries.push(copies);
        }
    }
    WedderburnData::assemble(alg, isometries)
}

/// Flattened index of the pair `(i, j)`.
pub fn pair_index(i: usize, j: usize, nb: usize) -> usize {
    i * nb + j
}

/// Block pairs matched between the assembled and the direct decomposition.
#[derive(Debug, Clone)]
pub struct ProductCheck {
    /// `matching[k]` is the direct block corresponding to product block `k`.
    pub matching: Vec<usize>,
    pub algebra_equal: bool,
}

/// Compares assembled product data with an independent decomposition of
/// `C*(E ⊗min F)`: same algebra, same block multiset, and a bijection of
/// blocks with equal characters on a common basis.
pub fn validate_product_blocks(
    product: &WedderburnData,
    direct: &WedderburnData,
    tol: &Tolerances,
) -> Result<ProductCheck> {
    let algebra_equal = product.algebra().space().equals(direct.algebra().space(), tol)?;
    if !algebra_equal {
        return Err(Error::Decomposition("C*(E (x) F) differs from C*(E) (x) C*(F)".into()));
    }
    if product.block_multiset() != direct.block_multiset() {
        return Err(Error::Decomposition(format!(
            "block multisets differ: assembled {:?}, direct {:?}",
            product.block_multiset(),
            direct.block_multiset()
        )));
    }
    let basis = product.algebra().basis();
    let chars = |w: &WedderburnData, i: usize| -> Vec<C64> { basis.iter().map(|a| w.irrep(i, a).trace()).collect() };
    let direct_chars: Vec<Vec<C64>> = (0..direct.num_blocks()).map(|j| chars(direct, j)).collect();
    let mut used = alloc::vec![false; direct.num_blocks()];
    let mut matching = Vec::with_capacity(product.num_blocks());
    for i in 0..product.num_blocks() {
        let ci = chars(product, i);
        let scale = 1.0 + ci.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let found = (0..direct.num_blocks()).find(|&j| {
            !used[j]
                && direct.blocks()[j].dim == product.blocks()[i].dim
                && direct.blocks()[j].mult == product.blocks()[i].mult
                && ci.iter().zip(&direct_chars[j]).all(|(a, b)| (a - b).norm() <= 1e-7 * scale)
        });
        match found {
            Some(j) => {
                used[j] = true;
                matching.push(j);
            }
            None => return Err(Error::Decomposition(format!("product block {} has no direct counterpart", i + 1))),
        }
    }
    Ok(ProductCheck { matching, algebra_equal })
}

/// `ker(q_I ⊗ q_J)`: the product blocks `(i, j)` with `i ∈ I` or `j ∈ J`.
pub fn kernel_of_tensor_quotients(i: &BlockIdeal, na: usize, j: &BlockIdeal, nb: usize) -> Result<BlockIdeal> {
    let bad = i.killed().iter().find(|&&k| k >= na).or_else(|| j.killed().iter().find(|&&k| k >= nb));
    if let Some(&b) = bad {
        return Err(Error::InvalidBlock(b));
    }
    let mut killed = BTreeSet::new();
    for a in 0..na {
        for b in 0..nb {
            if i.contains_block(a) || j.contains_block(b) {
                killed.insert(pair_index(a, b, nb));
            }
        }
    }
    BlockIdeal::with_blocks(na * nb, killed)
}

/// Outcome of the main tensor theorem check.
#[derive(Debug, Clone)]
pub struct MainTheoremReport {
    pub left: Envelope,
    pub right: Envelope,
    pub system: TensorSystem,
    pub product: WedderburnData,
    pub product_check: ProductCheck,
    /// Šilov ideal of the product by kernel intersection.
    pub direct: SilovResult,
    /// Šilov ideal of the product by lattice search, when the product has at
    /// most [`LATTICE_CAP`] blocks.
    pub lattice: Option<SilovResult>,
    /// `ker(q_I ⊗ q_J)` for the factors' Šilov ideals.
    pub expected: BlockIdeal,
    /// Šilov ideal of the product contained in `expected` as subspaces.
    pub contained: bool,
    /// Falsifier on `q_expected` restricted to `E ⊗ F`.
    pub falsifier: Option<Counterexample>,
    /// Envelope block sizes of the product and the pairwise products of the
    /// factors' envelope block sizes, both sorted.
    pub envelope_blocks: Vec<usize>,
    pub expected_envelope_blocks: Vec<usize>,
    /// The product envelope, for downstream propagation checks.
    pub envelope: Envelope,
    pub failures: Vec<String>,
}

impl MainTheoremReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn routes_agree(&self) -> bool {
        self.lattice.as_ref().is_none_or(|l| l.silov == self.direct.silov)
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Envelope of `E` from its own decomposition and kernel-intersection Šilov
/// ideal.
pub fn envelope_of(e: &OperatorSystem, params: &SearchParams, tol: &Tolerances) -> Result<Envelope> {
    let a = generated_cstar(e, tol)?;
    let w = wedderburn_decompose(&a, params.seed, tol)?;
    let s = silov_ideal_dk(e, &w, params, tol)?;
    envelope_from(e, w, s, params, tol)
}

/// Checks that the Šilov ideal of `E ⊗min F` is `ker(q_I ⊗ q_J)` for the
/// Šilov ideals `I`, `J` of the factors, and that the envelope block sizes
/// multiply.
pub fn verify_main_theorem(
    e: &OperatorSystem,
    f: &OperatorSystem,
    params: &SearchParams,
    tol: &Tolerances,
    ambient_cap: usize,
) -> Result<MainTheoremReport> {
    let n = e.ambient() * f.ambient();
    if n > ambient_cap {
        return Err(Error::TooLarge(n, ambient_cap));
    }
    let left = envelope_of(e, params, tol)?;
    let right = envelope_of(f, params, tol)?;
    let system = min_tensor(e, f, tol)?;
    let product = product_blocks(&left.algebra, &right.algebra, tol);
    product.verify(tol)?;
    let direct_alg = generated_cstar(&system.product, tol)?;
    let direct_w = wedderburn_decompose(&direct_alg, params.seed, tol)?;
    let product_check = validate_product_blocks(&product, &direct_w, tol)?;

    let mut failures = Vec::new();
    let direct = silov_ideal_dk(&system.product, &product, params, tol)?;
    let lattice = if product.num_blocks() <= LATTICE_CAP {
        Some(silov_ideal_lattice(&system.product, &product, params, tol)?)
    } else {
        None
    };
    if let Some(l) = &lattice {
        if l.silov != direct.silov {
            failures.push(format!(
                "Šilov routes disagree on the product: kernel intersection {:?}, lattice {:?}",
                direct.silov.one_based(),
                l.silov.one_based()
            ));
        }
    }

    let na = left.algebra.num_blocks();
    let nb = right.algebra.num_blocks();
    let expected = kernel_of_tensor_quotients(&left.silov.silov, na, &right.silov.silov, nb)?;
    let contained = direct.silov.subspace(&product, tol).is_subspace_of(&expected.subspace(&product, tol), tol)?;
    if !contained {
        failures.push("Šilov ideal of the product is not inside ker(q_I (x) q_J)".into());
    }
    let qk = quotient_map(&product, &expected)?;
    let falsifier = falsify_complete_isometry(&system.product, &qk, params.falsifier_trials, params.seed, tol);
    if let Some(cx) = &falsifier {
        failures.push(format!(
            "q_I (x) q_J is not completely isometric on the product: level {} norm {:.6} -> {:.6}",
            cx.level, cx.norm_x, cx.norm_image
        ));
    }
    if direct.silov != expected {
        failures.push(format!(
            "Šilov ideal of the product {:?} differs from ker(q_I (x) q_J) {:?}",
            direct.silov.one_based(),
            expected.one_based()
        ));
    }

    let envelope = envelope_from(&system.product, product.clone(), direct.clone(), params, tol)?;
    let envelope_blocks = sorted(envelope.blocks().iter().map(|b| b.0).collect());
    let mut pairwise = Vec::new();
    for (da, _) in left.blocks() {
        for (db, _) in right.blocks() {
            pairwise.push(da * db);
        }
    }
    let expected_envelope_blocks = sorted(pairwise);
    if envelope_blocks != expected_envelope_blocks {
        failures.push(format!(
            "envelope blocks {:?} differ from pairwise products {:?}",
            envelope_blocks, expected_envelope_blocks
        ));
    }

    Ok(MainTheoremReport {
        left,
        right,
        system,
        product,
        product_check,
        direct,
        lattice,
        expected,
        contained,
        falsifier,
        envelope_blocks,
        expected_envelope_blocks,
        envelope,
        failures,
    })
}

#[derive(Debug, Clone)]
pub struct HopenwasserReport {
    pub left_reps: BTreeSet<usize>,
    pub right_reps: BTreeSet<usize>,
    /// One decision per pair `(i, j)` of boundary representations.
    pub pairs: Vec<((usize, usize), UniquenessResult)>,
}

impl HopenwasserReport {
    pub fn passed(&self) -> bool {
        !self.pairs.is_empty() && self.pairs.iter().all(|(_, r)| r.unique)
    }
}

/// For boundary representations `σ₁` of `E` and `σ₂` of `F`, checks that
/// `σ₁ ⊗ σ₂` has a unique UCP extension from `E ⊗min F`.
pub fn verify_hopenwasser(
    e: &OperatorSystem,
    f: &OperatorSystem,
    params: &SearchParams,
    tol: &Tolerances,
) -> Result<HopenwasserReport> {
    let wa = wedderburn_decompose(&generated_cstar(e, tol)?, params.seed, tol)?;
    let wb = wedderburn_decompose(&generated_cstar(f, tol)?, params.seed, tol)?;
    verify_hopenwasser_with(e, &wa, f, &wb, params, tol)
}

/// As [`verify_hopenwasser`], reusing decompositions of `C*(E)`, `C*(F)`.
pub fn verify_hopenwasser_with(
    e: &OperatorSystem,
    wa: &WedderburnData,
    f: &OperatorSystem,
    wb: &WedderburnData,
    params: &SearchParams,
    tol: &Tolerances,
) -> Result<HopenwasserReport> {
    let (left_reps, _) = boundary_representations(e, wa, params, tol)?;
    let (right_reps, _) = boundary_representations(f, wb, params, tol)?;
    hopenwasser_pairs(e, wa, left_reps, f, wb, right_reps, params, tol)
}

/// As [`verify_hopenwasser_with`] for already known boundary
/// representations of the factors.
#[allow(clippy::too_many_arguments)]
pub fn hopenwasser_pairs(
    e: &OperatorSystem,
    wa: &WedderburnData,
    left_reps: BTreeSet<usize>,
    f: &OperatorSystem,
    wb: &WedderburnData,
    right_reps: BTreeSet<usize>,
    params: &SearchParams,
    tol: &Tolerances,
) -> Result<HopenwasserReport> {
    let system = min_tensor(e, f, tol)?;
    let product = product_blocks(wa, wb, tol);
    let mut pairs = Vec::new();
    for &i in &left_reps {
        for &j in &right_reps {
            let s = ucp_extension_set(&system.product, &product, pair_index(i, j, wb.num_blocks()), tol)?;
            pairs.push(((i, j), is_unique_ucp_extension(&s, params, tol)?));
        }
    }
    Ok(HopenwasserReport { left_reps, right_reps, pairs })
}

fn intersect_family(family: &[BlockIdeal], n: usize) -> Result<BlockIdeal> {
    let mut it = family.iter();
    let first = it.next().ok_or_else(|| Error::Precondition("empty ideal family".into()))?;
    let mut acc: BTreeSet<usize> = first.killed().clone();
    for k in it {
        acc = acc.intersection(k.killed()).copied().collect();
    }
    BlockIdeal::with_blocks(n, acc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LazarReport {
    pub i: BlockIdeal,
    pub j: BlockIdeal,
    pub lhs: BlockIdeal,
    pub rhs: BlockIdeal,
}

impl LazarReport {
    pub fn passed(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// With `I = ⋂K` and `J = ⋂L`, compares `ker(q_I ⊗ q_J)` with
/// `⋂_{K,L} ker(q_K ⊗ q_L)` as block sets. An intersection of ideals
/// occupies the blocks common to all of them.
pub fn verify_lazar(na: usize, nb: usize, ks: &[BlockIdeal], ls: &[BlockIdeal]) -> Result<LazarReport> {
    let i = intersect_family(ks, na)?;
    let j = intersect_family(ls, nb)?;
    let lhs = kernel_of_tensor_quotients(&i, na, &j, nb)?;
    let mut kernels = Vec::with_capacity(ks.len() * ls.len());
    for k in ks {
        for l in ls {
            kernels.push(kernel_of_tensor_quotients(k, na, l, nb)?);
        }
    }
    let rhs = intersect_family(&kernels, na * nb)?;
    Ok(LazarReport { i, j, lhs, rhs })
}

/// Isometry `C^{D_K} → C^{D_I}` selecting, inside `⊕_{i ∉ I} C^{d_i}`, the
/// summands that survive `K ⊇ I`.
fn selector(dims: &[usize], i: &BlockIdeal, k: &BlockIdeal) -> Mat {
    let kept: Vec<usize> = (0..dims.len()).filter(|b| !i.contains_block(*b)).collect();
    let big: usize = kept.iter().map(|&b| dims[b]).sum();
    let small: usize = kept.iter().filter(|&&b| !k.contains_block(b)).map(|&b| dims[b]).sum();
    let mut v = Mat::zeros(big, small);
    let (mut row, mut col) = (0, 0);
    for &b in &kept {
        if !k.contains_block(b) {
            for r in 0..dims[b] {
                v[(row + r, col + r)] = C64::new(1.0, 0.0);
            }
            col += dims[b];
        }
        row += dims[b];
    }
    v
}

/// Block-diagonal support pattern of `(A/I) ⊗ (B/J)` inside
/// `M_{D_I} ⊗ M_{D_J}`: which rows of each tensor factor share a block.
fn block_labels(dims: &[usize], ideal: &BlockIdeal) -> Vec<usize> {
    let mut out = Vec::new();
    for (b, &d) in dims.iter().enumerate() {
        if !ideal.contains_block(b) {
            out.extend(core::iter::repeat_n(b, d));
        }
    }
    out
}

/// `N(x) = sup_{K,L} ‖(q_{K/I} ⊗ q_{L/J})(x)‖` for `x` in
/// `(A/I) ⊗ (B/J) ⊆ M_{D_I} ⊗ M_{D_J}`, where `A/I` is realized as
/// `⊕_{i ∉ I} M_{d_i}`. The families must intersect to `I` and `J`.
pub fn lazar_seminorm(
    dims_a: &[usize],
    dims_b: &[usize],
    i: &BlockIdeal,
    j: &BlockIdeal,
    ks: &[BlockIdeal],
    ls: &[BlockIdeal],
    x: &Mat,
) -> Result<f64> {
    if intersect_family(ks, dims_a.len())? != *i || intersect_family(ls, dims_b.len())? != *j {
        return Err(Error::Precondition("ideal families do not intersect to I and J".into()));
    }
    let la = block_labels(dims_a, i);
    let lb = block_labels(dims_b, j);
    let (da, db) = (la.len(), lb.len());
    if x.rows() != da * db || x.cols() != da * db {
        return Err(Error::Shape(format!("x is {}x{}, expected {}x{}", x.rows(), x.cols(), da * db, da * db)));
    }
    for r in 0..da * db {
        for c in 0..da * db {
            let same = la[r / db] == la[c / db] && lb[r % db] == lb[c % db];
            if !same && x[(r, c)].norm() > 1e-12 * (1.0 + x.max_abs()) {
                return Err(Error::Precondition("x is not in (A/I) (x) (B/J)".into()));
            }
        }
    }
    let mut sup = 0.0f64;
    for k in ks {
        let vk = selector(dims_a, i, k);
        for l in ls {
            let v = vk.kron(&selector(dims_b, j, l));
            if v.cols() > 0 {
                sup = sup.max(op_norm(&x.compress(&v)));
            }
        }
    }
    Ok(sup)
}
