use alloc::vec::Vec;

use super::eig::null_space;
use super::mat::{Mat, C64};
use crate::error::{Error, Result};
use crate::tol::Tolerances;

/// Linear subspace of `M_n` held as a Hilbert–Schmidt orthonormal basis.
#[derive(Debug, Clone)]
pub struct MatSubspace {
    ambient: usize,
    basis: Vec<Mat>,
}

impl MatSubspace {
    pub fn zero(ambient: usize) -> MatSubspace {
        MatSubspace { ambient, basis: Vec::new() }
    }

    /// All of `M_n`, spanned by matrix units in row-major order.
    pub fn full(ambient: usize) -> MatSubspace {
        let basis = (0..ambient * ambient).map(|k| Mat::unit(ambient, k / ambient, k % ambient)).collect();
        MatSubspace { ambient, basis }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }

    /// Coordinates `⟨b_k, a⟩` of `a` in the orthonormal basis.
    pub fn coords(&self, a: &Mat) -> Vec<C64> {
        self.basis.iter().map(|b| b.hs_dot(a)).collect()
    }

    pub fn from_coords(&self, c: &[C64]) -> Mat {
        let mut out = Mat::zeros(self.ambient, self.ambient);
        for (b, &z) in self.basis.iter().zip(c) {
            out.axpy(z, b);
        }
        out
    }

    /// Orthogonal projection onto the subspace.
    pub fn project(&self, a: &Mat) -> Mat {
        self.from_coords(&self.coords(a))
    }

    /// Distance from `a` to the subspace in Hilbert–Schmidt norm.
    pub fn residual(&self, a: &Mat) -> f64 {
        (a - &self.project(a)).hs_norm()
    }

    pub fn contains(&self, a: &Mat, tol: &Tolerances) -> Result<bool> {
        if !a.is_square() || a.rows() != self.ambient {
            return Err(Error::Ambient(self.ambient, a.rows()));
        }
        Ok(self.contains_unchecked(a, tol.rank))
    }

    pub(crate) fn contains_unchecked(&self, a: &Mat, tol_rank: f64) -> bool {
        // The absolute floor keeps round-off products of exact zeros inside.
        self.residual(a) <= tol_rank * a.hs_norm() + 1e-14
    }

    /// `self ⊆ other`.
    pub fn is_subspace_of(&self, other: &MatSubspace, tol: &Tolerances) -> Result<bool> {
        if self.ambient != other.ambient {
            return Err(Error::Ambient(self.ambient, other.ambient));
        }
        Ok(self.basis.iter().all(|b| other.contains_unchecked(b, tol.rank)))
    }

    pub fn equals(&self, other: &MatSubspace, tol: &Tolerances) -> Result<bool> {
        Ok(self.dim() == other.dim()
            && self.is_subspace_of(other, tol)?
            && other.is_subspace_of(self, tol)?)
    }

    /// Intersection, computed as the null space of the residual map
    /// `c ↦ (1 - P_other) Σ c_k b_k` on this subspace's coordinates.
    pub fn intersect(&self, other: &MatSubspace, tol: &Tolerances) -> Result<MatSubspace> {
        if self.ambient != other.ambient {
            return Err(Error::Ambient(self.ambient, other.ambient));
        }
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(MatSubspace::zero(self.ambient));
        }
        let nn = self.ambient * self.ambient;
        let resid: Vec<Mat> = self.basis.iter().map(|b| b - &other.project(b)).collect();
        let m = Mat::from_fn(nn, self.dim(), |i, k| resid[k].data()[i]);
        // Columns are residuals of unit vectors, so a null vector of the
        // padded system corresponds to singular value below tol relative to 1.
        let ns = null_space_abs(&m, tol.rank);
        let mats: Vec<Mat> = ns.iter().map(|c| self.from_coords(c)).collect();
        Ok(span_of_unchecked(&mats, self.ambient, tol.rank))
    }

    /// A real-orthonormal basis of Hermitian matrices spanning the subspace
    /// (complex-linearly). Requires the subspace to be adjoint-closed.
    pub fn hermitian_basis(&self, tol: &Tolerances) -> Vec<Mat> {
        let mut herm = Vec::with_capacity(2 * self.dim());
        for b in &self.basis {
            herm.push(b.hermitian_part());
            let skew = (b - &b.adjoint()).scale(C64::new(0.0, -0.5));
            herm.push(skew);
        }
        real_orthonormal(&herm, tol.rank)
    }

    /// Whether `a*` lies in the subspace for every basis element `a`.
    pub fn is_adjoint_closed(&self, tol: &Tolerances) -> bool {
        self.basis.iter().all(|b| self.contains_unchecked(&b.adjoint(), tol.rank))
    }
}

/// Null space with an absolute singular-value cutoff.
fn null_space_abs(m: &Mat, tol: f64) -> Vec<Vec<C64>> {
    // `null_space` cuts relative to s_max; rescale the cutoff so that it acts
    // relative to 1 (columns are residuals of unit-norm vectors).
    let smax = super::eig::op_norm(m);
    if smax <= tol {
        return (0..m.cols())
            .map(|k| (0..m.cols()).map(|j| C64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
    }
    null_space(m, tol / smax)
}

/// Orthonormalizes Hermitian matrices over the reals (inner product
/// `Re tr(a b)`), which keeps every output Hermitian.
pub(crate) fn real_orthonormal(mats: &[Mat], tol_rank: f64) -> Vec<Mat> {
    let scale = mats.iter().map(Mat::hs_norm).fold(0.0, f64::max);
    let mut out: Vec<Mat> = Vec::new();
    for m in mats {
        let mut v = m.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.hs_dot(&v).re;
                v.axpy(C64::new(-c, 0.0), q);
            }
        }
        let nrm = v.hs_norm();
        if nrm > tol_rank * scale && nrm > 0.0 {
            out.push(v.scale_re(1.0 / nrm));
        }
    }
    out
}

/// Span of a list of `n × n` matrices.
///
/// Modified Gram–Schmidt with one re-orthogonalization pass; a vector whose
/// residual falls below `tol.rank` times the largest input norm is discarded.
pub fn span_of(mats: &[Mat], ambient: usize, tol: &Tolerances) -> Result<MatSubspace> {
    for m in mats {
        if m.rows() != ambient || m.cols() != ambient {
            return Err(Error::Ambient(ambient, m.rows()));
        }
    }
    Ok(span_of_unchecked(mats, ambient, tol.rank))
}

pub(crate) fn span_of_unchecked(mats: &[Mat], ambient: usize, tol_rank: f64) -> MatSubspace {
    let scale = mats.iter().map(Mat::hs_norm).fold(0.0, f64::max);
    let mut basis: Vec<Mat> = Vec::new();
    for m in mats {
        if basis.len() == ambient * ambient {
            break;
        }
        let mut v = m.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.hs_dot(&v);
                v.axpy(-c, q);
            }
        }
        let nrm = v.hs_norm();
        if nrm > tol_rank * scale && nrm > 0.0 {
            basis.push(v.scale_re(1.0 / nrm));
        }
    }
    MatSubspace { ambient, basis }
}

/// `s` and `t` span the same subspace.
pub fn subspace_equal(s: &MatSubspace, t: &MatSubspace, tol: &Tolerances) -> Result<bool> {
    s.equals(t, tol)
}

pub fn subspace_contains(s: &MatSubspace, a: &Mat, tol: &Tolerances) -> Result<bool> {
    s.contains(a, tol)
}
