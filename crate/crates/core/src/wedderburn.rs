//! Block structure of finite-dimensional *-subalgebras of `M_n`.
//!
//! A unital *-subalgebra `A ⊆ M_n` is unitarily equivalent to
//! `⊕_i M_{d_i} ⊗ 1_{m_i}`. [`wedderburn_decompose`] finds the conjugating
//! unitary from random elements of the center and of the commutant, and reads
//! off the irreducible representations `π_i` as compressions to one copy of
//! each block.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig_unchecked, null_space, span_of_unchecked, Mat, MatSubspace, C64};
use crate::opsys::CStarAlgebra;
use crate::rng;
use crate::tol::Tolerances;

/// Relative eigenvalue gap below which two eigenvalues are treated as one.
const CLUSTER_GAP: f64 = 1e-6;
const SEED_RETRIES: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    /// Size `d` of the matrix block `M_d`.
    pub dim: usize,
    /// Number of identical copies `m` in the ambient space.
    pub mult: usize,
    /// First row of the block's first copy in `u`.
    pub offset: usize,
}

/// Wedderburn data for a unital *-subalgebra of `M_n`.
///
/// Row layout of `u`: blocks in order, each block's `mult` copies contiguous,
/// each copy `dim` rows. For every `a` in the algebra, `u a u*` is block
/// diagonal with identical copies.
#[derive(Debug, Clone)]
pub struct WedderburnData {
    algebra: CStarAlgebra,
    u: Mat,
    blocks: Vec<Block>,
    irreps: Vec<Vec<Mat>>,
}

impl WedderburnData {
    pub(crate) fn assemble(algebra: CStarAlgebra, isometries: Vec<Vec<Mat>>) -> WedderburnData {
        let n = algebra.ambient();
        let mut u = Mat::zeros(n, n);
        let mut blocks = Vec::with_capacity(isometries.len());
        let mut row = 0;
        for copies in &isometries {
            let dim = copies[0].cols();
            blocks.push(Block { dim, mult: copies.len(), offset: row });
            for b in copies {
                u.set_block(row, 0, &b.adjoint());
                row += dim;
            }
        }
        debug_assert_eq!(row, n);
        let irreps = isometries
            .iter()
            .map(|copies| algebra.basis().iter().map(|a| a.compress(&copies[0])).collect())
            .collect();
        WedderburnData { algebra, u, blocks, irreps }
    }

    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn ambient(&self) -> usize {
        self.algebra.ambient()
    }

    pub fn u(&self) -> &Mat {
        &self.u
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    /// `(d_i, m_i)` pairs sorted, for label-free comparisons.
    pub fn block_multiset(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self.blocks.iter().map(|b| (b.dim, b.mult)).collect();
        v.sort_unstable();
        v
    }

    /// Values of `π_i` on the algebra basis.
    pub fn irreps(&self) -> &[Vec<Mat>] {
        &self.irreps
    }

    /// Isometry `C^{d_i} → C^n` onto copy `copy` of block `i`.
    pub fn isometry(&self, i: usize, copy: usize) -> Mat {
        let b = self.blocks[i];
        self.u.block(b.offset + copy * b.dim, 0, b.dim, self.ambient()).adjoint()
    }

    /// `π_i(a)`: compression of `a` to the first copy of block `i`.
    pub fn irrep(&self, i: usize, a: &Mat) -> Mat {
        a.compress(&self.isometry(i, 0))
    }

    /// Character `a ↦ tr π_i(a)` evaluated on the algebra basis.
    pub fn character(&self, i: usize) -> Vec<C64> {
        self.irreps[i].iter().map(Mat::trace).collect()
    }

    /// Element of the algebra acting as `x` on every copy of block `i` and as
    /// zero elsewhere.
    pub fn embed_block(&self, i: usize, x: &Mat) -> Mat {
        let b = self.blocks[i];
        let n = self.ambient();
        let mut out = Mat::zeros(n, n);
        for c in 0..b.mult {
            let v = self.isometry(i, c);
            out = &out + &(&(&v * x) * &v.adjoint());
        }
        out
    }

    /// Checks every structural invariant; used after decomposition and on
    /// product data.
    pub fn verify(&self, tol: &Tolerances) -> Result<()> {
        let n = self.ambient();
        let uu = &self.u * &self.u.adjoint();
        let du = uu.max_abs_diff(&Mat::identity(n));
        if du > tol.ortho * (n as f64).max(1.0) {
            return Err(Error::Decomposition(format!("u is not unitary (defect {du:e})")));
        }
        let d2: usize = self.blocks.iter().map(|b| b.dim * b.dim).sum();
        if d2 != self.algebra.dim() {
            return Err(Error::Decomposition(format!(
                "sum of squared block sizes {} differs from algebra dimension {}",
                d2,
                self.algebra.dim()
            )));
        }
        let md: usize = self.blocks.iter().map(|b| b.dim * b.mult).sum();
        if md != n {
            return Err(Error::Decomposition(format!("blocks fill {md} of {n} dimensions")));
        }
        for (k, a) in self.algebra.basis().iter().enumerate() {
            let conj = &(&self.u * a) * &self.u.adjoint();
            let mut model = Mat::zeros(n, n);
            for (i, b) in self.blocks.iter().enumerate() {
                for c in 0..b.mult {
                    let r = b.offset + c * b.dim;
                    model.set_block(r, r, &self.irreps[i][k]);
                }
            }
            let err = conj.max_abs_diff(&model);
            if err > tol.rank * a.hs_norm().max(1.0) * 10.0 {
                return Err(Error::Decomposition(format!(
                    "basis element {k} is not block diagonal (residual {err:e})"
                )));
            }
        }
        Ok(())
    }
}

/// `{x ∈ M_n : xa = ax for every basis element a}`.
pub fn commutant(alg: &CStarAlgebra, tol: &Tolerances) -> MatSubspace {
    commutant_of(alg.basis(), alg.ambient(), tol)
}

pub(crate) fn commutant_of(mats: &[Mat], n: usize, tol: &Tolerances) -> MatSubspace {
    if mats.is_empty() {
        return MatSubspace::full(n);
    }
    let nn = n * n;
    // Row (k, i, j) of the stacked system is entry (i, j) of x a_k − a_k x.
    let mut sys = Mat::zeros(mats.len() * nn, nn);
    for (k, a) in mats.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let r = k * nn + i * n + j;
                for q in 0..n {
                    sys[(r, i * n + q)] += a[(q, j)];
                }
                for p in 0..n {
                    sys[(r, p * n + j)] -= a[(i, p)];
                }
            }
        }
    }
    let ns = null_space(&sys, tol.rank);
    let mats: Vec<Mat> = ns.into_iter().map(|v| Mat::from_vec(n, n, v).expect("n*n entries")).collect();
    span_of_unchecked(&mats, n, tol.rank)
}

/// Center `A ∩ A'`.
pub fn center(alg: &CStarAlgebra, tol: &Tolerances) -> Result<MatSubspace> {
    alg.space().intersect(&commutant(alg, tol), tol)
}

/// Random real combination of a Hermitian basis.
fn random_hermitian(herm: &[Mat], n: usize, stream: &mut rng::Stream) -> Mat {
    let mut out = Mat::zeros(n, n);
    for h in herm {
        out.axpy(C64::new(rng::gauss(stream), 0.0), h);
    }
    out
}

/// Groups ascending eigenvalues into clusters of near-equal values.
fn clusters(values: &[f64]) -> Vec<core::ops::Range<usize>> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(
        values.last().copied().unwrap_or(0.0) - values.first().copied().unwrap_or(0.0),
    );
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > CLUSTER_GAP * scale.max(f64::MIN_POSITIVE) {
            out.push(start..k);
            start = k;
        }
    }
    out
}

fn cmp_character(a: &[C64], b: &[C64]) -> Ordering {
    const EPS: f64 = 1e-8;
    for (x, y) in a.iter().zip(b) {
        if (x.re - y.re).abs() > EPS {
            return x.re.total_cmp(&y.re);
        }
        if (x.im - y.im).abs() > EPS {
            return x.im.total_cmp(&y.im);
        }
    }
    Ordering::Equal
}

fn try_decompose(
    alg: &CStarAlgebra,
    comm: &MatSubspace,
    cent: &MatSubspace,
    seed: u64,
    tol: &Tolerances,
) -> Result<WedderburnData> {
    let n = alg.ambient();
    let mut stream = rng::stream(seed, &[0x57ED]);
    let cent_h = cent.hermitian_basis(tol);
    let comm_h = comm.hermitian_basis(tol);

    // Isotypic components from a generic central element.
    let z = random_hermitian(&cent_h, n, &mut stream);
    let ez = herm_eig_unchecked(&z);
    let zc = clusters(&ez.values);
    if zc.len() != cent.dim() {
        return Err(Error::Decomposition(format!(
            "central element split into {} components, center has dimension {}",
            zc.len(),
            cent.dim()
        )));
    }

    let c = random_hermitian(&comm_h, n, &mut stream);
    let mut mix = Mat::zeros(n, n);
    for b in comm.basis() {
        mix.axpy(rng::gauss_complex(&mut stream), b);
    }

    let mut blocks: Vec<(Vec<Mat>, Vec<C64>)> = Vec::with_capacity(zc.len());
    for range in zc {
        let v = ez.vectors.columns(range.start, range.len());
        // Split the isotypic component into copies using the commutant.
        let ec = herm_eig_unchecked(&c.compress(&v));
        let cc = clusters(&ec.values);
        let mult = cc.len();
        let r = range.len();
        if r % mult != 0 || cc.iter().any(|s| s.len() != r / mult) {
            return Err(Error::Decomposition("commutant split into unequal copies".into()));
        }
        let dim = r / mult;
        let copies: Vec<Mat> =
            cc.iter().map(|s| &v * &ec.vectors.columns(s.start, s.len())).collect();

        // Align copies with the first through a generic commutant element,
        // whose (s, 0) corner is a multiple of a unitary intertwiner.
        let first = copies[0].clone();
        let mut aligned = alloc::vec![first.clone()];
        for w in copies.iter().skip(1) {
            let y = &(&w.adjoint() * &mix) * &first;
            let mu2 = (&y.adjoint() * &y).trace().re / dim as f64;
            if mu2 <= tol.rank {
                return Err(Error::Decomposition("degenerate intertwiner draw".into()));
            }
            let yy = (&y.adjoint() * &y).scale_re(1.0 / mu2);
            if yy.max_abs_diff(&Mat::identity(dim)) > 1e-6 {
                return Err(Error::Decomposition("copies are not intertwined".into()));
            }
            aligned.push(&(w * &y).scale_re(1.0 / mu2.sqrt()) * &Mat::identity(dim));
        }
        let character = alg.basis().iter().map(|a| a.compress(&first).trace()).collect();
        blocks.push((aligned, character));
    }

    blocks.sort_by(|a, b| {
        b.0[0].cols().cmp(&a.0[0].cols()).then_with(|| cmp_character(&a.1, &b.1))
    });
    let w = WedderburnData::assemble(alg.clone(), blocks.into_iter().map(|b| b.0).collect());
    w.verify(tol)?;
    let m2: usize = w.blocks.iter().map(|b| b.mult * b.mult).sum();
    if m2 != comm.dim() {
        return Err(Error::Decomposition(format!(
            "commutant dimension {} differs from sum of squared multiplicities {}",
            comm.dim(),
            m2
        )));
    }
    Ok(w)
}

/// Block-decomposes a unital *-subalgebra of `M_n`.
///
/// Retries with fresh seeds when a random draw is degenerate.
pub fn wedderburn_decompose(alg: &CStarAlgebra, seed: u64, tol: &Tolerances) -> Result<WedderburnData> {
    if !alg.is_unital() {
        return Err(Error::Precondition("algebra must contain the identity".into()));
    }
    let comm = commutant(alg, tol);
    let cent = alg.space().intersect(&comm, tol)?;
    let mut last = Error::Decomposition("no attempt made".into());
    for attempt in 0..SEED_RETRIES {
        match try_decompose(alg, &comm, &cent, seed.wrapping_add(attempt), tol) {
            Ok(w) => return Ok(w),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Commutant of `π_i(A)` inside `M_{d_i}` has dimension one.
pub fn is_irreducible(w: &WedderburnData, i: usize, tol: &Tolerances) -> Result<bool> {
    if i >= w.num_blocks() {
        return Err(Error::InvalidBlock(i));
    }
    Ok(commutant_of(&w.irreps[i], w.blocks[i].dim, tol).dim() == 1)
}

/// An ideal of a block algebra `⊕_i M_{d_i}`, given by the set of blocks it
/// occupies. Its quotient map discards exactly those blocks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockIdeal {
    killed: BTreeSet<usize>,
}

impl BlockIdeal {
    pub fn new(w: &WedderburnData, killed: impl IntoIterator<Item = usize>) -> Result<BlockIdeal> {
        BlockIdeal::with_blocks(w.num_blocks(), killed)
    }

    pub fn with_blocks(num_blocks: usize, killed: impl IntoIterator<Item = usize>) -> Result<BlockIdeal> {
        let killed: BTreeSet<usize> = killed.into_iter().collect();
        if let Some(&bad) = killed.iter().find(|&&i| i >= num_blocks) {
            return Err(Error::InvalidBlock(bad));
        }
        Ok(BlockIdeal { killed })
    }

    pub fn zero() -> BlockIdeal {
        BlockIdeal { killed: BTreeSet::new() }
    }

    pub fn killed(&self) -> &BTreeSet<usize> {
        &self.killed
    }

    pub fn is_subset(&self, other: &BlockIdeal) -> bool {
        self.killed.is_subset(&other.killed)
    }

    pub fn contains_block(&self, i: usize) -> bool {
        self.killed.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.killed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.killed.is_empty()
    }

    /// 1-based indices, as used in reports.
    pub fn one_based(&self) -> Vec<usize> {
        self.killed.iter().map(|i| i + 1).collect()
    }

    /// The ideal as a subspace of the algebra: elements whose image vanishes
    /// in every surviving block, found as a null space on algebra coordinates.
    pub fn subspace(&self, w: &WedderburnData, tol: &Tolerances) -> MatSubspace {
        let alg = w.algebra();
        let kept: Vec<usize> = (0..w.num_blocks()).filter(|i| !self.killed.contains(i)).collect();
        let rows: usize = kept.iter().map(|&i| w.blocks[i].dim.pow(2)).sum();
        if rows == 0 {
            return alg.space().clone();
        }
        let mut sys = Mat::zeros(rows, alg.dim());
        for (k, _) in alg.basis().iter().enumerate() {
            let mut r = 0;
            for &i in &kept {
                for z in w.irreps[i][k].data() {
                    sys[(r, k)] = *z;
                    r += 1;
                }
            }
        }
        let coords = null_space(&sys, tol.rank);
        let mats: Vec<Mat> = coords.iter().map(|c| alg.space().from_coords(c)).collect();
        span_of_unchecked(&mats, alg.ambient(), tol.rank)
    }
}

/// All `2^#blocks` block ideals ordered by (cardinality, lexicographic).
pub fn enumerate_ideals(w: &WedderburnData) -> Vec<BlockIdeal> {
    enumerate_subsets(w.num_blocks())
}

pub(crate) fn enumerate_subsets(num_blocks: usize) -> Vec<BlockIdeal> {
    let mut all: Vec<Vec<usize>> = (0u64..1 << num_blocks)
        .map(|mask| (0..num_blocks).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all.into_iter().map(|k| BlockIdeal { killed: k.into_iter().collect() }).collect()
}

/// Canonical quotient map `A → A/I`, realized as `a ↦ ⊕_{i ∉ I} π_i(a)`.
#[derive(Debug, Clone)]
pub struct QuotientMap {
    ideal: BlockIdeal,
    kept: Vec<usize>,
    isometries: Vec<Mat>,
    source_ambient: usize,
}

impl QuotientMap {
    pub fn ideal(&self) -> &BlockIdeal {
        &self.ideal
    }

    /// Surviving block indices, in order.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn target_dim(&self) -> usize {
        self.isometries.iter().map(Mat::cols).sum()
    }

    pub fn kept_dims(&self) -> Vec<usize> {
        self.isometries.iter().map(Mat::cols).collect()
    }

    pub fn apply(&self, a: &Mat) -> Mat {
        debug_assert_eq!(a.rows(), self.source_ambient);
        let parts: Vec<Mat> = self.isometries.iter().map(|v| a.compress(v)).collect();
        Mat::direct_sum(&parts)
    }
}

pub fn quotient_map(w: &WedderburnData, ideal: &BlockIdeal) -> Result<QuotientMap> {
    if let Some(&bad) = ideal.killed.iter().find(|&&i| i >= w.num_blocks()) {
        return Err(Error::InvalidBlock(bad));
    }
    let kept: Vec<usize> = (0..w.num_blocks()).filter(|i| !ideal.killed.contains(i)).collect();
    let isometries = kept.iter().map(|&i| w.isometry(i, 0)).collect();
    Ok(QuotientMap { ideal: ideal.clone(), kept, isometries, source_ambient: w.ambient() })
}
