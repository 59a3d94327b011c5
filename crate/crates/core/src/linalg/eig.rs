use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use core::cmp::Ordering;

use nalgebra::linalg::{SymmetricEigen, SVD};
use nalgebra::DMatrix;

use super::mat::{Mat, C64};
use crate::error::{Error, Result};

/// Spectral decomposition `a = V diag(values) V*` with ascending values.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: Mat,
}

impl Eigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Columns whose eigenvalue satisfies `keep`.
    pub fn select(&self, mut keep: impl FnMut(f64) -> bool) -> Mat {
        let n = self.vectors.rows();
        let idx: Vec<usize> = (0..self.values.len()).filter(|&k| keep(self.values[k])).collect();
        Mat::from_fn(n, idx.len(), |i, j| self.vectors[(i, idx[j])])
    }

    /// `V diag(f(values)) V*`.
    pub fn rebuild(&self, mut f: impl FnMut(f64) -> f64) -> Mat {
        let n = self.vectors.rows();
        let mut out = Mat::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            for i in 0..n {
                let vi = v[i] * w;
                for j in 0..n {
                    out[(i, j)] += vi * v[j].conj();
                }
            }
        }
        out
    }
}

/// Lexicographic order on complex vectors, real part first.
fn cmp_vec(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending; exact ties are ordered by the first
/// differing eigenvector component, larger first (so `0_n` yields `I_n`).
/// Each eigenvector is rotated so that its first component of non-negligible
/// modulus is real and positive, which pins the phase ambiguity and keeps
/// reports reproducible.
pub fn herm_eig(a: &Mat, tol_herm: f64) -> Result<Eigen> {
    let defect = a.hermitian_defect();
    if defect > tol_herm * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(herm_eig_unchecked(&a.hermitian_part()))
}

pub(crate) fn herm_eig_unchecked(a: &Mat) -> Eigen {
    let n = a.rows();
    if n == 0 {
        return Eigen { values: Vec::new(), vectors: Mat::zeros(0, 0) };
    }
    let eig = SymmetricEigen::new(a.to_na());
    let mut cols: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| {
            let mut v: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
            normalize_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    cols.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| cmp_vec(&b.1, &a.1)));
    let values = cols.iter().map(|c| c.0).collect();
    let vectors = Mat::from_fn(n, n, |i, j| cols[j].1[i]);
    Eigen { values, vectors }
}

fn normalize_phase(v: &mut [C64]) {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    if let Some(z) = v.iter().copied().find(|z| z.norm() > 1e-8 * peak) {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Operator norm (largest singular value).
pub fn op_norm(a: &Mat) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let g = if a.rows() >= a.cols() { &a.adjoint() * a } else { a * &a.adjoint() };
    herm_eig_unchecked(&g).max().max(0.0).sqrt()
}

/// Top singular triple `(s, u, v)` with `a v = s u`.
pub fn top_singular(a: &Mat) -> (f64, Vec<C64>, Vec<C64>) {
    let g = &a.adjoint() * a;
    let e = herm_eig_unchecked(&g);
    let k = e.values.len() - 1;
    let v = e.vectors.column(k);
    let mut u: Vec<C64> = (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| a[(i, j)] * v[j]).sum())
        .collect();
    let s = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if s > 0.0 {
        for z in u.iter_mut() {
            *z /= s;
        }
    }
    (s, u, v)
}

/// Orthonormal basis of `{x : a x = 0}` as vectors, using a relative
/// singular-value cutoff `tol * s_max`.
pub fn null_space(a: &Mat, tol: f64) -> Vec<Vec<C64>> {
    let (m, p) = (a.rows(), a.cols());
    if p == 0 {
        return Vec::new();
    }
    // Pad so that the thin SVD carries a full right basis.
    let mut na = DMatrix::<C64>::zeros(m.max(p), p);
    for i in 0..m {
        for j in 0..p {
            na[(i, j)] = a[(i, j)];
        }
    }
    let svd = SVD::new(na, false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = tol * smax.max(f64::MIN_POSITIVE);
    let mut out: Vec<Vec<C64>> = (0..p)
        .filter(|&k| smax == 0.0 || svd.singular_values[k] <= cut)
        .map(|k| vt.row(k).iter().map(|z| z.conj()).collect())
        .collect();
    for v in out.iter_mut() {
        normalize_phase(v);
    }
    out
}

/// Real version of [`null_space`] for a matrix given by rows.
pub fn null_space_real(rows: &[Vec<f64>], p: usize, tol: f64) -> Vec<Vec<f64>> {
    if p == 0 {
        return Vec::new();
    }
    let m = rows.len();
    let mut na = DMatrix::<f64>::zeros(m.max(p), p);
    for (i, r) in rows.iter().enumerate() {
        for (j, &x) in r.iter().enumerate() {
            na[(i, j)] = x;
        }
    }
    let svd = SVD::new(na, false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = tol * smax;
    (0..p)
        .filter(|&k| smax == 0.0 || svd.singular_values[k] <= cut)
        .map(|k| {
            let mut v: Vec<f64> = vt.row(k).iter().copied().collect();
            if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-8) {
                if first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v
        })
        .collect()
}

/// Eigendecomposition of a real symmetric matrix, ascending.
pub fn sym_eig_real(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn op_norm_examples() {
        assert!((op_norm(&Mat::unit(2, 0, 1)) - 1.0).abs() < 1e-14);
        assert!((op_norm(&Mat::identity(3)) - 1.0).abs() < 1e-14);
        assert!((op_norm(&Mat::diag_real(&[3.0, -4.0])) - 4.0).abs() < 1e-14);
        assert_eq!(op_norm(&Mat::zeros(2, 2)), 0.0);
    }

    #[test]
    fn eig_diag() {
        let e = herm_eig(&Mat::diag_real(&[2.0, 1.0]), TOL).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 2.0).abs() < 1e-14);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((e.vectors[(0, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_pauli_x() {
        let x = Mat::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = herm_eig(&x, TOL).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let h = 1.0 / 2f64.sqrt();
        for k in 0..2 {
            for i in 0..2 {
                assert!((e.vectors[(i, k)].norm() - h).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eig_zero() {
        let e = herm_eig(&Mat::zeros(2, 2), TOL).unwrap();
        assert_eq!(e.values, [0.0, 0.0]);
        assert!(e.vectors.max_abs_diff(&Mat::identity(2)) < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        assert!(matches!(herm_eig(&Mat::unit(2, 0, 1), TOL), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = Mat::from_real(2, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]);
        let ns = null_space(&a, TOL);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!((v[0] + v[1]).norm() < 1e-12);
        }
    }
}
