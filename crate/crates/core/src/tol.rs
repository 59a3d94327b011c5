use crate::error::{Error, Result};

/// Numerical thresholds used for every rank, positivity and separation
/// decision in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank and span-membership decisions.
    pub rank: f64,
    /// Eigenvalue floor below which a matrix is not positive semidefinite.
    pub psd: f64,
    pub herm: f64,
    pub ortho: f64,
    /// Minimum Hilbert–Schmidt distance separating two UCP extensions.
    pub sep: f64,
    /// Minimum norm drop reported by the complete-isometry falsifier.
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-9,
            psd: 1e-8,
            herm: 1e-9,
            ortho: 1e-9,
            sep: 1e-6,
            norm: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.rank, self.psd, self.herm, self.ortho, self.sep, self.norm];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Precondition("tolerances must be finite and positive".into()));
        }
        if self.rank >= 1.0 {
            return Err(Error::Precondition("tol_rank must be below 1".into()));
        }
        Ok(())
    }
}
