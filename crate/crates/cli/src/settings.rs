//! Numerical settings shared by every subcommand, and the exit-code contract.

use std::fmt;

use clap::Args;
use serde::Serialize;
use silov_core::boundary::SearchParams;
use silov_core::{Error, Tolerances};

/// Environment variable naming a tolerance profile; flags always win.
pub const PROFILE_ENV: &str = "SILOV_TOL_PROFILE";

/// Process exit codes. Stable API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Ok,
    /// A theorem check or the route cross-check failed.
    Failure,
    /// A numerical procedure did not reach a decision.
    Inconclusive,
    /// Malformed input or I/O trouble.
    Input,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Input => 1,
            Outcome::Failure => 2,
            Outcome::Inconclusive => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Ok => "ok",
            Outcome::Failure => "FAILURE",
            Outcome::Inconclusive => "INCONCLUSIVE",
            Outcome::Input => "INPUT-ERROR",
        }
    }

    /// Combines outcomes of a batch: input errors dominate, then failures,
    /// then inconclusive runs.
    pub fn worst(self, other: Outcome) -> Outcome {
        let rank = |o: Outcome| match o {
            Outcome::Ok => 0,
            Outcome::Inconclusive => 1,
            Outcome::Failure => 2,
            Outcome::Input => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }

    pub fn of_error(e: &Error) -> Outcome {
        match e {
            Error::Inconclusive(_) | Error::Decomposition(_) | Error::EmptyBoundary => Outcome::Inconclusive,
            Error::NoUniqueMaximum | Error::PropagationStalled { .. } | Error::NotContained | Error::Closure(_) => {
                Outcome::Failure
            }
            Error::Shape(_)
            | Error::NotHermitian(_)
            | Error::Ambient(..)
            | Error::InvalidBlock(_)
            | Error::Precondition(_)
            | Error::TooLarge(..) => Outcome::Input,
        }
    }
}

/// An error that ends a command, with its exit code.
#[derive(Debug, Clone, thiserror::Error)]
pub struct CliError {
    pub outcome: Outcome,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    pub fn input(message: impl Into<String>) -> CliError {
        CliError { outcome: Outcome::Input, message: message.into() }
    }

    pub fn core(context: &str, e: &Error) -> CliError {
        CliError { outcome: Outcome::of_error(e), message: format!("{context}: {e}") }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NumericFlags {
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Relative cutoff for rank and membership decisions.
    #[arg(long)]
    pub tol_rank: Option<f64>,
    /// Eigenvalue floor for positive semidefiniteness.
    #[arg(long)]
    pub tol_psd: Option<f64>,
    /// Distance separating two UCP extensions.
    #[arg(long)]
    pub tol_sep: Option<f64>,
    /// Minimum norm drop reported by the falsifier.
    #[arg(long)]
    pub tol_norm: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub falsifier_trials: usize,
    #[arg(long, default_value_t = 32)]
    pub uniqueness_trials: usize,
    /// Largest product ambient dimension for tensor checks.
    #[arg(long, default_value_t = silov_core::tensor::DEFAULT_AMBIENT_CAP)]
    pub max_ambient_product: usize,
}

/// Everything that influences numerical decisions, echoed into reports.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub seed: u64,
    pub profile: String,
    pub tolerances: TolReport,
    pub falsifier_trials: usize,
    pub uniqueness_trials: usize,
    pub max_ambient_product: usize,
    pub dykstra_cap: usize,
    pub probe_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TolReport {
    pub rank: f64,
    pub psd: f64,
    pub herm: f64,
    pub ortho: f64,
    pub sep: f64,
    pub norm: f64,
}

fn profile(name: &str) -> Option<Tolerances> {
    let d = Tolerances::default();
    match name {
        "default" => Some(d),
        "strict" => Some(Tolerances { rank: 1e-10, psd: 1e-9, herm: 1e-10, ortho: 1e-10, sep: 1e-7, norm: 1e-7 }),
        "loose" => Some(Tolerances { rank: 1e-8, psd: 1e-7, herm: 1e-8, ortho: 1e-8, sep: 1e-5, norm: 1e-5 }),
        _ => None,
    }
}

impl Settings {
    /// Resolves flags on top of the profile named by [`PROFILE_ENV`].
    pub fn resolve(flags: &NumericFlags, env_profile: Option<&str>) -> Result<Settings, CliError> {
        let name = env_profile.filter(|s| !s.is_empty()).unwrap_or("default");
        let mut tol = profile(name)
            .ok_or_else(|| CliError::input(format!("{PROFILE_ENV}: unknown profile `{name}` (expected default, strict or loose)")))?;
        if let Some(v) = flags.tol_rank {
            tol.rank = v;
        }
        if let Some(v) = flags.tol_psd {
            tol.psd = v;
        }
        if let Some(v) = flags.tol_sep {
            tol.sep = v;
        }
        if let Some(v) = flags.tol_norm {
            tol.norm = v;
        }
        tol.validate().map_err(|e| CliError::input(format!("tolerances: {e}")))?;
        if flags.uniqueness_trials == 0 {
            return Err(CliError::input("--uniqueness-trials must be at least 1"));
        }
        let params = SearchParams::default();
        Ok(Settings {
            seed: flags.seed,
            profile: name.to_string(),
            tolerances: TolReport { rank: tol.rank, psd: tol.psd, herm: tol.herm, ortho: tol.ortho, sep: tol.sep, norm: tol.norm },
            falsifier_trials: flags.falsifier_trials,
            uniqueness_trials: flags.uniqueness_trials,
            max_ambient_product: flags.max_ambient_product,
            dykstra_cap: params.dykstra_cap,
            probe_scale: params.probe_scale,
        })
    }

    pub fn from_env(flags: &NumericFlags) -> Result<Settings, CliError> {
        let env = std::env::var(PROFILE_ENV).ok();
        Settings::resolve(flags, env.as_deref())
    }

    pub fn tol(&self) -> Tolerances {
        let t = &self.tolerances;
        Tolerances { rank: t.rank, psd: t.psd, herm: t.herm, ortho: t.ortho, sep: t.sep, norm: t.norm }
    }

    pub fn params(&self) -> SearchParams {
        SearchParams {
            seed: self.seed,
            uniqueness_trials: self.uniqueness_trials,
            falsifier_trials: self.falsifier_trials,
            dykstra_cap: self.dykstra_cap,
            probe_scale: self.probe_scale,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> NumericFlags {
        NumericFlags {
            seed: 1,
            tol_rank: None,
            tol_psd: None,
            tol_sep: None,
            tol_norm: None,
            falsifier_trials: 1000,
            uniqueness_trials: 32,
            max_ambient_product: 36,
        }
    }

    #[test]
    fn flags_override_profile() {
        let mut f = flags();
        f.tol_sep = Some(3e-6);
        let s = Settings::resolve(&f, Some("loose")).unwrap();
        assert_eq!(s.tolerances.sep, 3e-6);
        assert_eq!(s.tolerances.rank, 1e-8);
        assert_eq!(s.profile, "loose");
        assert_eq!(Settings::resolve(&flags(), None).unwrap().tol(), Tolerances::default());
    }

    #[test]
    fn bad_settings_are_input_errors() {
        assert_eq!(Settings::resolve(&flags(), Some("fast")).unwrap_err().outcome, Outcome::Input);
        let mut f = flags();
        f.tol_rank = Some(-1.0);
        assert_eq!(Settings::resolve(&f, None).unwrap_err().outcome, Outcome::Input);
    }

    #[test]
    fn batch_outcome_precedence() {
        assert_eq!(Outcome::Ok.worst(Outcome::Inconclusive), Outcome::Inconclusive);
        assert_eq!(Outcome::Failure.worst(Outcome::Inconclusive), Outcome::Failure);
        assert_eq!(Outcome::Failure.worst(Outcome::Input), Outcome::Input);
        assert_eq!(Outcome::Input.code(), 1);
    }
}
