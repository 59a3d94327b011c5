//! A small primal-dual interior-point method for block-diagonal Hermitian
//! programs
//!
//! ```text
//! minimize ⟨g, X⟩   subject to   Q x = c,  X ⪰ 0,
//! ```
//!
//! with `x` the packed form of `X` and `Q` having orthonormal rows. It uses the
//! HKM search direction with Mehrotra's predictor–corrector and an infeasible
//! start. It only resolves single directions of the boundary searches, so it
//! favours simplicity over scale.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::choi::HermBlocks;
use crate::linalg::{herm_eig_unchecked, Mat};

/// Iterations without a 10% merit improvement before giving up.
const STALL: usize = 6;

#[derive(Debug, Clone)]
pub struct SdpResult {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sym(t: &Mat) -> Mat {
    (t + &t.adjoint()).scale_re(0.5)
}

/// Largest step `α` keeping `X + α ΔX ⪰ 0`, from the eigenvalues of
/// `X^{-1/2} ΔX X^{-1/2}`; `f64::INFINITY` when every direction is safe.
fn max_step(xs: &[Mat], dxs: &[Mat]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (x, dx) in xs.iter().zip(dxs) {
        if x.rows() == 0 {
            continue;
        }
        let e = herm_eig_unchecked(x);
        let inv_sqrt = e.rebuild(|l| 1.0 / l.max(1e-300).sqrt());
        let m = &(&inv_sqrt * dx) * &inv_sqrt;
        let lmin = herm_eig_unchecked(&sym(&m)).min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

/// Solves the program from the standard infeasible starting point.
pub fn solve(layout: &HermBlocks, q: &DMatrix<f64>, c: &DVector<f64>, g: &DVector<f64>, max_iter: usize, tol: f64) -> SdpResult {
    let m = q.nrows();
    let p = layout.len();
    let n: f64 = layout.sizes().iter().sum::<usize>() as f64;
    let cmax = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let xi = 10f64.max(n.sqrt()).max(n * (1.0 + cmax) / 2.0);
    let eta = 10f64.max(n.sqrt()).max(g.norm());
    let ident = layout.identity();
    let mut x = &ident * xi;
    let mut z = &ident * eta;
    let mut y = DVector::zeros(m);
    let rows: Vec<Vec<Mat>> = (0..m).map(|k| layout.unpack(&q.row(k).transpose())).collect();
    let (cn, gn) = (c.norm(), g.norm());

    // Without a strictly feasible point the residuals stall near the square
    // root of machine precision and the iterates eventually degrade, so the
    // best iterate seen is what gets returned.
    let mut best = (f64::INFINITY, x.clone(), y.clone(), z.clone());
    let mut since_best = 0;
    for it in 0..max_iter {
        let rp = c - q * &x;
        let rd = g - q.transpose() * &y - &z;
        let mu = x.dot(&z) / n;
        let (pobj, dobj) = (g.dot(&x), c.dot(&y));
        let merit = (rp.norm() / (1.0 + cn))
            .max(rd.norm() / (1.0 + gn))
            .max((pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()));
        if !merit.is_finite() {
            break;
        }
        if merit <= tol {
            return SdpResult { x, y, z, iterations: it, converged: true };
        }
        if merit < 0.9 * best.0 {
            best = (merit, x.clone(), y.clone(), z.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best == STALL {
                break;
            }
        }
        let xb = layout.unpack(&x);
        let zb = layout.unpack(&z);
        let zinv: Vec<Mat> = zb.iter().map(|zz| herm_eig_unchecked(zz).rebuild(|l| 1.0 / l.max(1e-300))).collect();
        // Columns pack(sym(X A_k Z⁻¹)); the Schur matrix is Q times them.
        let mut h = DMatrix::zeros(p, m);
        for (k, ak) in rows.iter().enumerate() {
            let t: Vec<Mat> = ak.iter().zip(&xb).zip(&zinv).map(|((a, xx), zi)| sym(&(&(xx * a) * zi))).collect();
            h.set_column(k, &layout.pack(&t));
        }
        let mut schur = q * &h;
        schur = (&schur + schur.transpose()) * 0.5;
        let chol = match schur.clone().cholesky() {
            Some(ch) => ch,
            None => {
                let reg = 1e-14 * schur.diagonal().amax().max(1.0);
                for i in 0..m {
                    schur[(i, i)] += reg;
                }
                match schur.cholesky() {
                    Some(ch) => ch,
                    None => break,
                }
            }
        };
        let rdb = layout.unpack(&rd);
        let xrz: Vec<Mat> = xb.iter().zip(&rdb).zip(&zinv).map(|((xx, r), zi)| sym(&(&(xx * r) * zi))).collect();
        let q_xrz = q * layout.pack(&xrz);

        // Direction for a complementarity target `G` (a nonsymmetric block list).
        let direction = |gm: &[Mat]| -> (DVector<f64>, DVector<f64>, DVector<f64>) {
            let gs: Vec<Mat> = gm.iter().map(sym).collect();
            let rhs = &rp - q * layout.pack(&gs) + &q_xrz;
            let dy = chol.solve(&rhs);
            let dz = &rd - q.transpose() * &dy;
            let dzb = layout.unpack(&dz);
            let dx: Vec<Mat> = gm
                .iter()
                .zip(&xb)
                .zip(&dzb)
                .zip(&zinv)
                .map(|(((gg, xx), d), zi)| sym(&(gg - &(&(xx * d) * zi))))
                .collect();
            (layout.pack(&dx), dy, dz)
        };

        let neg_x: Vec<Mat> = xb.iter().map(|xx| xx.scale_re(-1.0)).collect();
        let (dxp, _, dzp) = direction(&neg_x);
        let ap = max_step(&xb, &layout.unpack(&dxp)).min(1.0);
        let ad = max_step(&zb, &layout.unpack(&dzp)).min(1.0);
        let mu_aff = (&x + &dxp * ap).dot(&(&z + &dzp * ad)) / n;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let dxpb = layout.unpack(&dxp);
        let dzpb = layout.unpack(&dzp);
        let corr: Vec<Mat> = (0..xb.len())
            .map(|b| {
                let base = &zinv[b].scale_re(sigma * mu) - &xb[b];
                &base - &(&(&dxpb[b] * &dzpb[b]) * &zinv[b])
            })
            .collect();
        let (dx, dy, dz) = direction(&corr);
        let tau = 0.95;
        let ap = (tau * max_step(&xb, &layout.unpack(&dx))).min(1.0);
        let ad = (tau * max_step(&zb, &layout.unpack(&dz))).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            break;
        }
        x += &dx * ap;
        y += &dy * ad;
        z += &dz * ad;
    }
    let (_, x, y, z) = best;
    SdpResult { x, y, z, iterations: max_iter, converged: false }
}
