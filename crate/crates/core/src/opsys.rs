//! Operator systems, generated C*-algebras and product spans.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{span_of_unchecked, Mat, MatSubspace};
use crate::tol::Tolerances;

/// A unital, adjoint-closed subspace `E ⊆ M_n`.
#[derive(Debug, Clone)]
pub struct OperatorSystem {
    space: MatSubspace,
    label: String,
}

impl OperatorSystem {
    /// Wraps a subspace after checking that it contains the unit and is
    /// closed under the adjoint.
    pub fn from_subspace(space: MatSubspace, label: impl Into<String>, tol: &Tolerances) -> Result<Self> {
        let n = space.ambient();
        if !space.contains_unchecked(&Mat::identity(n), tol.rank) {
            return Err(Error::Closure("identity not in operator system".into()));
        }
        if !space.is_adjoint_closed(tol) {
            return Err(Error::Closure("operator system is not adjoint-closed".into()));
        }
        Ok(OperatorSystem { space, label: label.into() })
    }

    pub fn ambient(&self) -> usize {
        self.space.ambient()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &MatSubspace {
        &self.space
    }

    pub fn basis(&self) -> &[Mat] {
        self.space.basis()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Span of `{I_n} ∪ gens ∪ gens*`.
pub fn opsys_from_generators(n: usize, gens: &[Mat], tol: &Tolerances) -> Result<OperatorSystem> {
    let mut all = Vec::with_capacity(1 + 2 * gens.len());
    all.push(Mat::identity(n));
    for (k, g) in gens.iter().enumerate() {
        if !g.is_square() || g.rows() != n {
            return Err(Error::Shape(format!(
                "generator {} is {}x{}, expected {}x{}",
                k,
                g.rows(),
                g.cols(),
                n,
                n
            )));
        }
        all.push(g.clone());
        all.push(g.adjoint());
    }
    let space = span_of_unchecked(&all, n, tol.rank);
    Ok(OperatorSystem { space, label: String::new() })
}

/// An adjoint-closed, multiplicatively closed subspace of `M_n`.
#[derive(Debug, Clone)]
pub struct CStarAlgebra {
    space: MatSubspace,
    unital: bool,
}

impl CStarAlgebra {
    /// Checks both closure invariants on basis pairs.
    pub fn from_subspace(space: MatSubspace, tol: &Tolerances) -> Result<Self> {
        if !space.is_adjoint_closed(tol) {
            return Err(Error::Closure("algebra is not adjoint-closed".into()));
        }
        let basis = space.basis();
        for a in basis {
            for b in basis {
                let ab = a * b;
                if !space.contains_unchecked(&ab, tol.rank) {
                    return Err(Error::Closure("algebra is not closed under products".into()));
                }
            }
        }
        let unital = space.contains_unchecked(&Mat::identity(space.ambient()), tol.rank);
        Ok(CStarAlgebra { space, unital })
    }

    /// Full matrix algebra `M_n`.
    pub fn full(n: usize) -> Self {
        CStarAlgebra { space: MatSubspace::full(n), unital: true }
    }

    pub(crate) fn from_parts(space: MatSubspace, unital: bool) -> Self {
        CStarAlgebra { space, unital }
    }

    pub fn ambient(&self) -> usize {
        self.space.ambient()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &MatSubspace {
        &self.space
    }

    pub fn basis(&self) -> &[Mat] {
        self.space.basis()
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }
}

/// Span of all products `p e` with `p` in `prev` and `e` in `E`, in a fixed
/// order (outer loop over `prev`).
fn next_power(prev: &MatSubspace, e: &OperatorSystem, tol: &Tolerances) -> MatSubspace {
    let mut prods = Vec::with_capacity(prev.dim() * e.dim());
    for p in prev.basis() {
        for b in e.basis() {
            prods.push(p * b);
        }
    }
    span_of_unchecked(&prods, e.ambient(), tol.rank)
}

/// `E^{∘k}`: the span of all `k`-fold products of elements of `E`.
pub fn power_span(e: &OperatorSystem, k: usize, tol: &Tolerances) -> Result<MatSubspace> {
    if k == 0 {
        return Err(Error::Precondition("power_span needs k >= 1".into()));
    }
    let mut cur = e.space().clone();
    for _ in 1..k {
        cur = next_power(&cur, e, tol);
    }
    Ok(cur)
}

/// Dimensions of `E^{∘1}, E^{∘2}, …` up to the last strict increase, together
/// with the stable power.
pub fn power_chain(e: &OperatorSystem, tol: &Tolerances) -> (Vec<usize>, MatSubspace) {
    let mut cur = e.space().clone();
    let mut dims = alloc::vec![cur.dim()];
    loop {
        let next = next_power(&cur, e, tol);
        if next.dim() == cur.dim() {
            return (dims, cur);
        }
        dims.push(next.dim());
        cur = next;
    }
}

/// `C*(E)`, realized as the stable power `E^{∘k*}`.
///
/// The chain `E ⊆ E^{∘2} ⊆ …` grows until it stops; since `E` is unital and
/// adjoint-closed, the stable power is a unital *-algebra containing `E`.
pub fn generated_cstar(e: &OperatorSystem, tol: &Tolerances) -> Result<CStarAlgebra> {
    let (_, space) = power_chain(e, tol);
    let alg = CStarAlgebra::from_parts(space, true);
    debug_assert!(CStarAlgebra::from_subspace(alg.space().clone(), tol).is_ok());
    Ok(alg)
}

/// The least `k` at which the power chain stabilizes.
pub fn stabilization_index(e: &OperatorSystem, tol: &Tolerances) -> usize {
    power_chain(e, tol).0.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn x() -> Mat {
        Mat::unit(2, 0, 1)
    }

    /// `(X, 1/2) ∈ M_2 ⊕ C` embedded in `M_3`.
    fn state_sum_generator() -> Mat {
        Mat::direct_sum(&[x(), Mat::diag_real(&[0.5])])
    }

    #[test]
    fn from_generators_examples() {
        let t = Tolerances::default();
        assert_eq!(opsys_from_generators(2, &[x()], &t).unwrap().dim(), 3);
        assert_eq!(opsys_from_generators(2, &[], &t).unwrap().dim(), 1);
        assert_eq!(opsys_from_generators(3, &[state_sum_generator()], &t).unwrap().dim(), 3);
        assert!(opsys_from_generators(3, &[x()], &t).is_err());
    }

    #[test]
    fn from_subspace_checks_invariants() {
        let t = Tolerances::default();
        let s = crate::linalg::span_of(&[x()], 2, &t).unwrap();
        assert!(OperatorSystem::from_subspace(s, "", &t).is_err());
        let s = crate::linalg::span_of(&[Mat::identity(2), x()], 2, &t).unwrap();
        assert!(OperatorSystem::from_subspace(s, "", &t).is_err());
    }

    #[test]
    fn power_span_examples() {
        let t = Tolerances::default();
        let ex = opsys_from_generators(2, &[x()], &t).unwrap();
        let p2 = power_span(&ex, 2, &t).unwrap();
        assert_eq!(p2.dim(), 4);
        let m2 = opsys_from_generators(2, &[x(), Mat::unit(2, 0, 0)], &t).unwrap();
        assert_eq!(power_span(&m2, 1, &t).unwrap().dim(), 4);
        let unit = opsys_from_generators(2, &[], &t).unwrap();
        for k in 1..4 {
            assert_eq!(power_span(&unit, k, &t).unwrap().dim(), 1);
        }
        assert!(power_span(&unit, 0, &t).is_err());
    }

    #[test]
    fn generated_cstar_examples() {
        let t = Tolerances::default();
        let ex = opsys_from_generators(2, &[x()], &t).unwrap();
        assert_eq!(generated_cstar(&ex, &t).unwrap().dim(), 4);
        assert_eq!(stabilization_index(&ex, &t), 2);

        let unit = opsys_from_generators(2, &[], &t).unwrap();
        assert_eq!(generated_cstar(&unit, &t).unwrap().dim(), 1);

        let ec = opsys_from_generators(3, &[state_sum_generator()], &t).unwrap();
        let a = generated_cstar(&ec, &t).unwrap();
        assert_eq!(a.dim(), 5);
        // (X, 1/2)^2 = (0, 1/4) isolates the scalar block.
        let g = state_sum_generator();
        let sq = &g * &g;
        assert_eq!(sq[(2, 2)], C64::new(0.25, 0.0));
        assert!(a.space().contains(&Mat::unit(3, 2, 2), &t).unwrap());
        assert!(CStarAlgebra::from_subspace(a.space().clone(), &t).is_ok());
    }
}
