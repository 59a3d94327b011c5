//! Choi-matrix spectrahedra: tuples of Hermitian blocks `(J_1, …, J_k)` cut
//! out by real affine constraints and blockwise positivity.
//!
//! Tuples are packed isometrically into `R^p` (diagonal entries, then `√2 Re`
//! and `√2 Im` of each upper off-diagonal entry), so the real trace pairing
//! `Σ_i Re tr(A_i B_i)` becomes the Euclidean dot product.
//!
//! Feasibility is attacked from both sides: Dykstra's alternating projections
//! with periodic face polishing for primal points, and alternating projections
//! onto a shifted cone for dual separators.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{herm_eig_unchecked, sym_eig_real, Mat, C64};

const SQRT2: f64 = core::f64::consts::SQRT_2;

/// Layout of a tuple of Hermitian blocks in packed real coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermBlocks {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    len: usize,
}

impl HermBlocks {
    pub fn new(sizes: &[usize]) -> HermBlocks {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut len = 0;
        for &s in sizes {
            offsets.push(len);
            len += s * s;
        }
        HermBlocks { sizes: sizes.to_vec(), offsets, len }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Real dimension `p = Σ s_i²`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    fn pack_block(m: &Mat, out: &mut [f64]) {
        let s = m.rows();
        let mut k = 0;
        for i in 0..s {
            out[k] = m[(i, i)].re;
            k += 1;
        }
        for i in 0..s {
            for j in i + 1..s {
                // Average the two triangles so slightly non-Hermitian input
                // packs to its Hermitian part.
                let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                out[k] = SQRT2 * z.re;
                out[k + 1] = SQRT2 * z.im;
                k += 2;
            }
        }
    }

    fn unpack_block(s: usize, x: &[f64]) -> Mat {
        let mut m = Mat::zeros(s, s);
        let mut k = 0;
        for i in 0..s {
            m[(i, i)] = C64::new(x[k], 0.0);
            k += 1;
        }
        for i in 0..s {
            for j in i + 1..s {
                let z = C64::new(x[k], x[k + 1]) / SQRT2;
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
                k += 2;
            }
        }
        m
    }

    pub fn pack(&self, blocks: &[Mat]) -> DVector<f64> {
        debug_assert_eq!(blocks.len(), self.sizes.len());
        let mut out = DVector::zeros(self.len);
        for (i, m) in blocks.iter().enumerate() {
            let s = self.sizes[i];
            Self::pack_block(m, &mut out.as_mut_slice()[self.offsets[i]..self.offsets[i] + s * s]);
        }
        out
    }

    /// Packs a single block into a full-length vector with zeros elsewhere.
    pub fn pack_one(&self, i: usize, m: &Mat) -> DVector<f64> {
        let mut out = DVector::zeros(self.len);
        let s = self.sizes[i];
        Self::pack_block(m, &mut out.as_mut_slice()[self.offsets[i]..self.offsets[i] + s * s]);
        out
    }

    pub fn unpack(&self, x: &DVector<f64>) -> Vec<Mat> {
        (0..self.sizes.len()).map(|i| self.block(x, i)).collect()
    }

    pub fn block(&self, x: &DVector<f64>, i: usize) -> Mat {
        let s = self.sizes[i];
        Self::unpack_block(s, &x.as_slice()[self.offsets[i]..self.offsets[i] + s * s])
    }

    pub fn identity(&self) -> DVector<f64> {
        let blocks: Vec<Mat> = self.sizes.iter().map(|&s| Mat::identity(s)).collect();
        self.pack(&blocks)
    }

    /// Smallest eigenvalue over all blocks (`+∞` for an empty layout).
    pub fn min_eig(&self, x: &DVector<f64>) -> f64 {
        (0..self.sizes.len())
            .filter(|&i| self.sizes[i] > 0)
            .map(|i| herm_eig_unchecked(&self.block(x, i)).min())
            .fold(f64::INFINITY, f64::min)
    }

    /// Projection onto `{J : J_i ⪰ floor·I for every block}`.
    pub fn project_psd(&self, x: &DVector<f64>, floor: f64) -> DVector<f64> {
        let mut out = x.clone();
        for i in 0..self.sizes.len() {
            let s = self.sizes[i];
            if s == 0 {
                continue;
            }
            let e = herm_eig_unchecked(&self.block(x, i));
            if e.min() >= floor {
                continue;
            }
            let m = e.rebuild(|l| l.max(floor));
            Self::pack_block(&m, &mut out.as_mut_slice()[self.offsets[i]..self.offsets[i] + s * s]);
        }
        out
    }

    /// Packed basis of `{V Z V* : Z Hermitian}` for per-block isometries `V_i`
    /// (one column per real basis element of each `Herm(r_i)`), orthonormal
    /// because each `V_i` is an isometry.
    pub fn face_basis(&self, vs: &[Mat]) -> DMatrix<f64> {
        let total: usize = vs.iter().map(|v| v.cols() * v.cols()).sum();
        let mut out = DMatrix::zeros(self.len, total);
        let mut col = 0;
        for (i, v) in vs.iter().enumerate() {
            let r = v.cols();
            let sub = HermBlocks::new(&[r]);
            for k in 0..r * r {
                let mut e = DVector::zeros(r * r);
                e[k] = 1.0;
                let z = sub.block(&e, 0);
                let m = &(v * &z) * &v.adjoint();
                let s = self.sizes[i];
                let mut buf = alloc::vec![0.0; s * s];
                Self::pack_block(&m, &mut buf);
                for (t, &val) in buf.iter().enumerate() {
                    out[(self.offsets[i] + t, col)] = val;
                }
                col += 1;
            }
        }
        out
    }
}

/// Pseudo-inverse square root data of a symmetric PSD Gram matrix: columns
/// `u_k / √λ_k` for eigenvalues above `cut · λ_max`.
fn whitening(g: &DMatrix<f64>, cut: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eig_real(g);
    let lmax = vals.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| lmax > 0.0 && vals[k] > cut * lmax).collect();
    DMatrix::from_fn(g.nrows(), keep.len(), |r, c| vecs[(r, keep[c])] / vals[keep[c]].sqrt())
}

/// Affine subspace `{x ∈ R^p : R x = b}` held as orthonormal rows `Q` with
/// `Q x = c`, plus a minimum-norm particular solution.
#[derive(Debug, Clone)]
pub struct Affine {
    q: DMatrix<f64>,
    c: DVector<f64>,
    xp: DVector<f64>,
    inconsistency: f64,
}

impl Affine {
    /// Builds the set from a constraint matrix. Rows are normalized first;
    /// rank is decided relative to the largest Gram eigenvalue.
    pub fn new(r: &DMatrix<f64>, b: &DVector<f64>, tol_rank: f64) -> Affine {
        let (m, p) = r.shape();
        let mut rn = r.clone();
        let mut bn = b.clone();
        for i in 0..m {
            let nrm = rn.row(i).norm();
            if nrm > 0.0 {
                rn.row_mut(i).scale_mut(1.0 / nrm);
                bn[i] /= nrm;
            }
        }
        // Gram eigenvalues are squared singular values, so the cutoff is looser
        // than `tol_rank` itself.
        let cut = (tol_rank * 1e-2).max(1e-13);
        let (q, xp) = if m <= p {
            let w = whitening(&(&rn * rn.transpose()), cut);
            let mut q = w.transpose() * &rn;
            // Second pass restores orthonormality lost to Gram squaring.
            let w2 = whitening(&(&q * q.transpose()), cut);
            q = w2.transpose() * q;
            let c0 = w2.transpose() * (w.transpose() * &bn);
            let xp = q.transpose() * c0;
            (q, xp)
        } else {
            let g = rn.transpose() * &rn;
            let (vals, vecs) = sym_eig_real(&g);
            let lmax = vals.iter().copied().fold(0.0, f64::max);
            let keep: Vec<usize> = (0..p).filter(|&k| lmax > 0.0 && vals[k] > cut * lmax).collect();
            let v = DMatrix::from_fn(p, keep.len(), |r, c| vecs[(r, keep[c])]);
            let rtb = rn.transpose() * &bn;
            let mut coef = v.transpose() * rtb;
            for (k, &idx) in keep.iter().enumerate() {
                coef[k] /= vals[idx];
            }
            (v.transpose(), v * coef)
        };
        let inconsistency = (&rn * &xp - &bn).norm();
        let c = &q * &xp;
        Affine { q, c, xp, inconsistency }
    }

    /// Affine set from orthonormal rows directly.
    pub fn from_orthonormal(q: DMatrix<f64>, c: DVector<f64>) -> Affine {
        let xp = q.transpose() * &c;
        Affine { q, c, xp, inconsistency: 0.0 }
    }

    pub fn dim_ambient(&self) -> usize {
        self.q.ncols()
    }

    pub fn rank(&self) -> usize {
        self.q.nrows()
    }

    /// Dimension of the direction space `null(R)`.
    pub fn null_dim(&self) -> usize {
        self.dim_ambient() - self.rank()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn particular(&self) -> &DVector<f64> {
        &self.xp
    }

    /// `‖R x_p − b‖` for normalized rows; zero when the system is consistent.
    pub fn inconsistency(&self) -> f64 {
        self.inconsistency
    }

    pub fn is_consistent(&self) -> bool {
        self.inconsistency <= 1e-8 * (1.0 + self.xp.norm())
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = &self.q * x - &self.c;
        x - self.q.transpose() * r
    }

    /// Component of `d` in the direction space.
    pub fn project_null(&self, d: &DVector<f64>) -> DVector<f64> {
        d - self.q.transpose() * (&self.q * d)
    }

    /// `‖Q x − c‖`, the distance from `x` to the affine set.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.q * x - &self.c).norm()
    }

    /// Distance from `y` to the row space (the span of the constraint rows).
    pub fn rowspace_residual(&self, y: &DVector<f64>) -> f64 {
        self.project_null(y).norm()
    }
}

/// Minimum-norm least-squares solution of `m z = rhs` via the smaller Gram
/// matrix.
pub(crate) fn min_norm_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let (r, s) = m.shape();
    if r == 0 || s == 0 {
        return DVector::zeros(s);
    }
    let cut = 1e-13;
    if s <= r {
        let w = whitening(&(m.transpose() * m), cut);
        &w * (w.transpose() * (m.transpose() * rhs))
    } else {
        let w = whitening(&(m * m.transpose()), cut);
        m.transpose() * (&w * (w.transpose() * rhs))
    }
}

/// Orthonormal basis (as columns) of `null(m)`, from the Gram matrix `mᵀm`.
pub(crate) fn null_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let s = m.ncols();
    if s == 0 {
        return DMatrix::zeros(0, 0);
    }
    let (vals, vecs) = sym_eig_real(&(m.transpose() * m));
    let lmax = vals.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..s).filter(|&k| lmax == 0.0 || vals[k] <= tol * tol * lmax).collect();
    DMatrix::from_fn(s, keep.len(), |r, c| vecs[(r, keep[c])])
}

/// A spectrahedron `{x : x ∈ affine, x ⪰ 0 blockwise}`.
#[derive(Debug, Clone)]
pub struct Spectrahedron {
    pub layout: HermBlocks,
    pub affine: Affine,
}

/// Thresholds for deciding feasibility of a packed point.
#[derive(Debug, Clone, Copy)]
pub struct Acceptance {
    pub residual: f64,
    pub psd: f64,
}

impl Spectrahedron {
    pub fn new(layout: HermBlocks, affine: Affine) -> Spectrahedron {
        debug_assert_eq!(layout.len(), affine.dim_ambient());
        Spectrahedron { layout, affine }
    }

    pub fn is_feasible(&self, x: &DVector<f64>, acc: Acceptance) -> bool {
        self.affine.residual(x) <= acc.residual * (1.0 + x.norm()) && self.layout.min_eig(x) >= -acc.psd
    }

    /// Searches for a feasible point near `x` of the form `J_i = G_i G_i*`,
    /// starting from the eigenvectors of `x` above a gap threshold and running
    /// Gauss–Newton on the affine residual in the factor `G`. Positivity holds
    /// by construction. Several candidate gaps are tried, highest rank first.
    pub fn polish(&self, x: &DVector<f64>, acc: Acceptance) -> Option<DVector<f64>> {
        let eigs: Vec<_> = (0..self.layout.num_blocks())
            .map(|i| herm_eig_unchecked(&self.layout.block(x, i)))
            .collect();
        let mut all: Vec<f64> = eigs.iter().flat_map(|e| e.values.iter().copied()).filter(|&l| l > 0.0).collect();
        all.sort_by(|a, b| b.total_cmp(a));
        let lmax = *all.first()?;
        let mut cuts: Vec<f64> = Vec::new();
        for k in 0..all.len() {
            let next = all.get(k + 1).copied().unwrap_or(0.0);
            if next < all[k] / 10.0 && next < 1e-2 * lmax {
                cuts.push((all[k] * next).sqrt().max(next));
            }
            if cuts.len() == 4 {
                break;
            }
        }
        for cut in cuts {
            let gs: Vec<Mat> = eigs
                .iter()
                .map(|e| {
                    let v = e.select(|l| l > cut);
                    let roots: Vec<f64> = e.values.iter().copied().filter(|&l| l > cut).map(f64::sqrt).collect();
                    Mat::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * roots[j])
                })
                .collect();
            if let Some(j) = self.factor_newton(gs, acc) {
                return Some(j);
            }
        }
        None
    }

    fn factor_newton(&self, mut gs: Vec<Mat>, acc: Acceptance) -> Option<DVector<f64>> {
        let layout = &self.layout;
        let gram = |gs: &[Mat]| -> DVector<f64> {
            let blocks: Vec<Mat> = gs.iter().map(|g| g * &g.adjoint()).collect();
            layout.pack(&blocks)
        };
        let unknowns: usize = gs.iter().map(|g| 2 * g.rows() * g.cols()).sum();
        if unknowns == 0 {
            return None;
        }
        let mut best = f64::INFINITY;
        let mut stalled = 0;
        for _ in 0..120 {
            let j = gram(&gs);
            let res = self.affine.rhs() - self.affine.rows() * &j;
            let rn = res.norm();
            let scale = 1.0 + j.norm();
            // Converge well past the acceptance threshold: near singular faces
            // the distance to the true point scales like the residual's root.
            if rn <= 1e-6 * acc.residual * scale {
                return Some(j);
            }
            if rn > 0.95 * best {
                stalled += 1;
                if stalled == 5 {
                    return (rn <= acc.residual * scale).then_some(j);
                }
            } else {
                stalled = 0;
            }
            best = best.min(rn);
            // Jacobian columns: packed d(G G*) for each real/imaginary entry of G.
            let mut jac = DMatrix::zeros(layout.len(), unknowns);
            let mut col = 0;
            for (i, g) in gs.iter().enumerate() {
                let (n, r) = (g.rows(), g.cols());
                for a in 0..n {
                    for k in 0..r {
                        for unit in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                            let mut dg = Mat::zeros(n, r);
                            dg[(a, k)] = unit;
                            let t = &dg * &g.adjoint();
                            let d = &t + &t.adjoint();
                            let packed = layout.pack_one(i, &d);
                            jac.set_column(col, &packed);
                            col += 1;
                        }
                    }
                }
            }
            let m = self.affine.rows() * jac;
            let step = min_norm_solve(&m, &res);
            let mut k = 0;
            for g in gs.iter_mut() {
                let (n, r) = (g.rows(), g.cols());
                for a in 0..n {
                    for c in 0..r {
                        g[(a, c)] += C64::new(step[k], step[k + 1]);
                        k += 2;
                    }
                }
            }
        }
        None
    }
}

/// Resumable state of Dykstra's alternating projections between the affine
/// set and the PSD cone. The limit is the projection of the starting point
/// onto the spectrahedron; only the cone step needs a correction term.
#[derive(Debug, Clone)]
pub struct DykstraState {
    x: DVector<f64>,
    corr: DVector<f64>,
    iterations: usize,
    gap: f64,
}

impl DykstraState {
    pub fn new(s: &Spectrahedron, x0: &DVector<f64>) -> DykstraState {
        DykstraState { x: s.affine.project(x0), corr: DVector::zeros(x0.len()), iterations: 0, gap: f64::INFINITY }
    }

    pub fn iterate(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Distance between the last cone and affine iterates.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Runs up to `steps` iterations, attempting a polish every
    /// `polish_every`. `accept(point, iterate)` is consulted on every verified
    /// feasible point and may reject it, in which case iteration continues.
    pub fn run(
        &mut self,
        s: &Spectrahedron,
        steps: usize,
        polish_every: usize,
        acc: Acceptance,
        mut accept: impl FnMut(&DVector<f64>, &DVector<f64>) -> bool,
    ) -> Option<DVector<f64>> {
        for _ in 0..steps {
            self.iterations += 1;
            let t = &self.x + &self.corr;
            let y = s.layout.project_psd(&t, 0.0);
            self.corr = t - &y;
            let xn = s.affine.project(&y);
            self.gap = (&xn - &y).norm();
            self.x = xn;
            let scale = 1.0 + self.x.norm();
            if self.gap <= acc.residual * scale && s.is_feasible(&self.x, acc) && accept(&self.x, &self.x) {
                return Some(self.x.clone());
            }
            if self.iterations.is_multiple_of(polish_every) {
                if let Some(p) = s.polish(&self.x, acc) {
                    if accept(&p, &self.x) {
                        return Some(p);
                    }
                }
            }
        }
        None
    }
}

/// Outcome of a Dykstra run.
#[derive(Debug, Clone)]
pub enum DykstraOutcome {
    /// A verified feasible point.
    Feasible { point: DVector<f64>, iterations: usize },
    /// The iteration cap was reached without a verified feasible point.
    Stalled { iterate: DVector<f64>, gap: f64 },
}

/// Runs [`DykstraState`] from `x0` up to `cap` iterations.
pub fn dykstra(
    s: &Spectrahedron,
    x0: &DVector<f64>,
    cap: usize,
    polish_every: usize,
    acc: Acceptance,
    accept: impl FnMut(&DVector<f64>, &DVector<f64>) -> bool,
) -> DykstraOutcome {
    let mut st = DykstraState::new(s, x0);
    match st.run(s, cap, polish_every, acc, accept) {
        Some(point) => DykstraOutcome::Feasible { point, iterations: st.iterations },
        None => DykstraOutcome::Stalled { gap: st.gap, iterate: st.x },
    }
}

/// Alternating projections between an affine set `{y = B w : a·w = 1}`
/// (orthonormal columns `B`) and a shifted cone `{y : W_i* y_i W_i ⪰ floor·I}`
/// (compressions to given isometries, or the full blocks when `None`).
/// Succeeds on the first affine iterate whose compressions have smallest
/// eigenvalue at least `floor / 2`.
#[derive(Debug, Clone)]
pub struct ConeSearch {
    basis: DMatrix<f64>,
    a: DVector<f64>,
    a2: f64,
    compress: Option<Vec<Mat>>,
    floor: f64,
    w: DVector<f64>,
}

impl ConeSearch {
    pub fn new(basis: DMatrix<f64>, a: DVector<f64>, compress: Option<Vec<Mat>>, floor: f64) -> Option<ConeSearch> {
        let a2 = a.norm_squared();
        if basis.ncols() == 0 || a2 <= 1e-24 {
            return None;
        }
        let w = &a / a2;
        Some(ConeSearch { basis, a, a2, compress, floor, w })
    }

    fn to_affine(&self, w: DVector<f64>) -> DVector<f64> {
        let s = self.a.dot(&w) - 1.0;
        w - &self.a * (s / self.a2)
    }

    fn compressed(&self, layout: &HermBlocks, y: &DVector<f64>, i: usize) -> Option<Mat> {
        let b = layout.block(y, i);
        match &self.compress {
            Some(ws) if ws[i].cols() == 0 => None,
            Some(ws) => Some(b.compress(&ws[i])),
            None if b.rows() == 0 => None,
            None => Some(b),
        }
    }

    /// Smallest eigenvalue over all compressed blocks.
    pub fn min_compressed(&self, layout: &HermBlocks, y: &DVector<f64>) -> f64 {
        (0..layout.num_blocks())
            .filter_map(|i| self.compressed(layout, y, i))
            .map(|m| herm_eig_unchecked(&m).min())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn run(&mut self, layout: &HermBlocks, iters: usize) -> Option<DVector<f64>> {
        for it in 0..iters {
            let y = &self.basis * &self.w;
            if it % 10 == 0 && self.min_compressed(layout, &y) >= self.floor / 2.0 {
                return Some(y);
            }
            let mut yc = y.clone();
            for i in 0..layout.num_blocks() {
                let Some(c) = self.compressed(layout, &y, i) else { continue };
                let e = herm_eig_unchecked(&c);
                if e.min() >= self.floor {
                    continue;
                }
                let fixed = e.rebuild(|l| l.max(self.floor));
                let nb = match &self.compress {
                    Some(ws) => {
                        let wi = &ws[i];
                        let delta = &fixed - &c;
                        &layout.block(&y, i) + &(&(wi * &delta) * &wi.adjoint())
                    }
                    None => fixed,
                };
                let s = layout.sizes[i];
                let off = layout.offsets[i];
                HermBlocks::pack_block(&nb, &mut yc.as_mut_slice()[off..off + s * s]);
            }
            self.w = self.to_affine(self.basis.transpose() * yc);
        }
        let y = &self.basis * &self.w;
        (self.min_compressed(layout, &y) >= self.floor / 2.0).then_some(y)
    }
}

/// Choi tuple of `x ↦ Σ_s V_s x V_s*` from `M_d` into `M_D` (one block).
pub fn choi_of_compressions(d: usize, vs: &[Mat]) -> Mat {
    let dd = vs.first().map(Mat::rows).unwrap_or(0);
    let mut j = Mat::zeros(d * dd, d * dd);
    for a in 0..d {
        for b in 0..d {
            let eab = Mat::unit(d, a, b);
            let mut img = Mat::zeros(dd, dd);
            for v in vs {
                img = &img + &(&(v * &eab) * &v.adjoint());
            }
            j.set_block(a * dd, b * dd, &img);
        }
    }
    j
}

/// Applies the map with Choi block `j` (source `M_d`, target `M_D`) to `x`:
/// `Φ(x) = Σ_{ab} x_ab J[a,b]`.
pub fn apply_choi(j: &Mat, d: usize, x: &Mat) -> Mat {
    let dd = j.rows().checked_div(d).unwrap_or(0);
    let mut out = Mat::zeros(dd, dd);
    for a in 0..d {
        for b in 0..d {
            let z = x[(a, b)];
            if z.norm() == 0.0 {
                continue;
            }
            out.axpy(z, &j.block(a * dd, b * dd, dd, dd));
        }
    }
    out
}
