//! Propagation numbers, computed from powers of `i_E(E)` inside the
//! C*-envelope.

use alloc::format;
use alloc::vec::Vec;

use crate::boundary::{Envelope, SearchParams};
use crate::error::{Error, Result};
use crate::opsys::{power_chain, power_span, OperatorSystem};
use crate::tensor::{envelope_of, kron_span, min_tensor};
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropResult {
    /// Least `k` with `i_E(E)^{∘k}` equal to the envelope.
    pub value: usize,
    /// `dim i_E(E)^{∘k}` for `k = 1..=value`.
    pub chain: Vec<usize>,
    pub envelope_dim: usize,
    /// The same chain for `E` inside `C*(E)`; informational only, it can
    /// differ when the Šilov ideal is nonzero.
    pub cstar_chain: Vec<usize>,
}

/// Propagation number of `E` from a computed envelope.
pub fn propagation_in(e: &OperatorSystem, env: &Envelope, tol: &Tolerances) -> Result<PropResult> {
    let (chain, _) = power_chain(&env.embedded, tol);
    let envelope_dim = env.dim();
    let reached = *chain.last().expect("chain is never empty");
    if reached != envelope_dim {
        return Err(Error::PropagationStalled { reached, envelope: envelope_dim });
    }
    let (cstar_chain, _) = power_chain(e, tol);
    Ok(PropResult { value: chain.len(), chain, envelope_dim, cstar_chain })
}

pub fn propagation_number(e: &OperatorSystem, params: &SearchParams, tol: &Tolerances) -> Result<PropResult> {
    let env = envelope_of(e, params, tol)?;
    propagation_in(e, &env, tol)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerTensorStep {
    pub n: usize,
    /// `dim E^{∘n} ⊗ F^{∘n}`.
    pub tensor_of_powers: usize,
    /// `dim (E ⊗ F)^{∘n}`.
    pub power_of_tensor: usize,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerTensorReport {
    pub steps: Vec<PowerTensorStep>,
}

impl PowerTensorReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.equal)
    }

    /// First `n` at which the spans differ.
    pub fn first_failure(&self) -> Option<usize> {
        self.steps.iter().find(|s| !s.equal).map(|s| s.n)
    }
}

/// Compares `E^{∘n} ⊗min F^{∘n}` with `(E ⊗min F)^{∘n}` in `M_{nm}` for
/// `n = 1..=n_max`, both computed from scratch.
pub fn verify_power_tensor(e: &OperatorSystem, f: &OperatorSystem, n_max: usize, tol: &Tolerances) -> Result<PowerTensorReport> {
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    let product = min_tensor(e, f, tol)?.product;
    let amb = product.ambient();
    let mut steps = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let pe = power_span(e, n, tol)?;
        let pf = power_span(f, n, tol)?;
        let lhs = kron_span(pe.basis(), pf.basis(), amb, tol);
        let rhs = power_span(&product, n, tol)?;
        let equal = lhs.equals(&rhs, tol)?;
        steps.push(PowerTensorStep { n, tensor_of_powers: lhs.dim(), power_of_tensor: rhs.dim(), equal });
    }
    Ok(PowerTensorReport { steps })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropMaxReport {
    pub left: PropResult,
    pub right: PropResult,
    pub product: PropResult,
}

impl PropMaxReport {
    pub fn expected(&self) -> usize {
        self.left.value.max(self.right.value)
    }

    pub fn passed(&self) -> bool {
        self.product.value == self.expected()
    }

    pub fn describe(&self) -> alloc::string::String {
        format!(
            "prop(E (x) F) = {} vs max({}, {}) = {}; chains {:?}, {:?}, {:?}",
            self.product.value,
            self.left.value,
            self.right.value,
            self.expected(),
            self.left.chain,
            self.right.chain,
            self.product.chain
        )
    }
}

/// Checks `prop(E ⊗min F) = max(prop E, prop F)`.
pub fn verify_prop_max(e: &OperatorSystem, f: &OperatorSystem, params: &SearchParams, tol: &Tolerances) -> Result<PropMaxReport> {
    let left = propagation_number(e, params, tol)?;
    let right = propagation_number(f, params, tol)?;
    let product = propagation_number(&min_tensor(e, f, tol)?.product, params, tol)?;
    Ok(PropMaxReport { left, right, product })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::opsys::opsys_from_generators;

    fn x() -> Mat {
        Mat::unit(2, 0, 1)
    }

    #[test]
    fn examples() {
        let t = Tolerances::default();
        let p = SearchParams::default();
        let m2 = opsys_from_generators(2, &[x(), Mat::unit(2, 0, 0)], &t).unwrap();
        assert_eq!(propagation_number(&m2, &p, &t).unwrap().value, 1);
        let ex = opsys_from_generators(2, &[x()], &t).unwrap();
        let r = propagation_number(&ex, &p, &t).unwrap();
        assert_eq!((r.value, r.chain.as_slice()), (2, &[3, 4][..]));
        let ec = opsys_from_generators(3, &[Mat::direct_sum(&[x(), Mat::diag_real(&[0.5])])], &t).unwrap();
        let r = propagation_number(&ec, &p, &t).unwrap();
        assert_eq!((r.value, r.envelope_dim), (2, 4));
        assert_eq!(r.cstar_chain, [3, 5]);
    }

    #[test]
    fn power_tensor_state_sum_jordan() {
        let t = Tolerances::default();
        let ec = opsys_from_generators(3, &[Mat::direct_sum(&[x(), Mat::diag_real(&[0.5])])], &t).unwrap();
        let ex = opsys_from_generators(2, &[x()], &t).unwrap();
        let r = verify_power_tensor(&ec, &ex, 3, &t).unwrap();
        assert!(r.passed());
        assert_eq!(r.steps[1].power_of_tensor, 20);
    }
}
