//! The `SystemSpec` input document: an operator system given by generators in
//! `M_n`, with explicit real and imaginary parts.
//!
//! ```json
//! {
//!   "schema": "v1",
//!   "name": "jordan_M2",
//!   "ambient_dim": 2,
//!   "generators": [ { "re": [[0, 1], [0, 0]], "im": [[0, 0], [0, 0]] } ]
//! }
//! ```
//!
//! The unit and the adjoints of the generators are adjoined automatically.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use silov_core::opsys::opsys_from_generators;
use silov_core::{Mat, OperatorSystem, Tolerances};

use crate::settings::CliError;

pub const SCHEMA: &str = "v1";
/// Largest accepted ambient dimension; everything downstream is dense.
pub const MAX_AMBIENT: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrix {
    pub fn from_mat(m: &Mat) -> ComplexMatrix {
        let rows = |f: fn(&silov_core::C64) -> f64| (0..m.rows()).map(|i| (0..m.cols()).map(|j| f(&m[(i, j)])).collect()).collect();
        ComplexMatrix { re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    pub fn to_mat(&self) -> Result<Mat, silov_core::Error> {
        Mat::from_re_im(&self.re, &self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub schema: String,
    pub name: String,
    pub ambient_dim: usize,
    pub generators: Vec<ComplexMatrix>,
}

impl SystemSpec {
    pub fn new(name: impl Into<String>, ambient_dim: usize, generators: &[Mat]) -> SystemSpec {
        SystemSpec {
            schema: SCHEMA.to_string(),
            name: name.into(),
            ambient_dim,
            generators: generators.iter().map(ComplexMatrix::from_mat).collect(),
        }
    }

    /// Checks the schema tag and every array shape, naming the offending
    /// field.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema != SCHEMA {
            return Err(format!("schema: expected \"{SCHEMA}\", found \"{}\"", self.schema));
        }
        if self.name.trim().is_empty() {
            return Err("name: must not be empty".into());
        }
        let n = self.ambient_dim;
        if n == 0 || n > MAX_AMBIENT {
            return Err(format!("ambient_dim: must be between 1 and {MAX_AMBIENT}, found {n}"));
        }
        for (g, m) in self.generators.iter().enumerate() {
            for (part, rows) in [("re", &m.re), ("im", &m.im)] {
                if rows.len() != n {
                    return Err(format!("generators[{g}].{part}: expected {n} rows, found {}", rows.len()));
                }
                for (r, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(format!("generators[{g}].{part}[{r}]: expected {n} entries, found {}", row.len()));
                    }
                    if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                        return Err(format!("generators[{g}].{part}[{r}][{c}]: not a finite number"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_system(&self, tol: &Tolerances) -> Result<OperatorSystem, silov_core::Error> {
        let gens = self.generators.iter().map(ComplexMatrix::to_mat).collect::<Result<Vec<_>, _>>()?;
        Ok(opsys_from_generators(self.ambient_dim, &gens, tol)?.with_label(self.name.clone()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("specs always serialize");
        s.push('\n');
        s
    }
}

/// A parsed input together with the digest of its exact bytes.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub spec: SystemSpec,
    pub file: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses a spec from bytes. Errors carry the field path and, for syntax
/// and type errors, the line and column.
pub fn parse_spec(bytes: &[u8], origin: &str) -> Result<SystemSpec, CliError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let spec: SystemSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let at = format!("line {} column {}", inner.line(), inner.column());
        if path == "." {
            CliError::input(format!("{origin}: {at}: {inner}"))
        } else {
            CliError::input(format!("{origin}: {at}: field `{path}`: {inner}"))
        }
    })?;
    spec.validate().map_err(|m| CliError::input(format!("{origin}: {m}")))?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<LoadedSpec, CliError> {
    let origin = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| CliError::input(format!("{origin}: {e}")))?;
    let spec = parse_spec(&bytes, &origin)?;
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or(origin);
    Ok(LoadedSpec { spec, file, sha256: sha256_hex(&bytes) })
}

#[cfg(test)]
mod tests {
    use super::*;

    const JORDAN: &str = r#"{
  "schema": "v1",
  "name": "jordan_M2",
  "ambient_dim": 2,
  "generators": [{"re": [[0, 1], [0, 0]], "im": [[0, 0], [0, 0]]}]
}"#;

    #[test]
    fn parses_and_builds() {
        let s = parse_spec(JORDAN.as_bytes(), "j.json").unwrap();
        let e = s.to_system(&Tolerances::default()).unwrap();
        assert_eq!((e.dim(), e.ambient(), e.label()), (3, 2, "jordan_M2"));
        let again = parse_spec(s.to_json().as_bytes(), "k.json").unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let bad = JORDAN.replace("[[0, 1], [0, 0]]", "[[0, \"x\"], [0, 0]]");
        let err = parse_spec(bad.as_bytes(), "j.json").unwrap_err();
        assert!(err.message.contains("line 5"), "{}", err.message);
        assert!(err.message.contains("generators[0].re[0][1]"), "{}", err.message);

        let short = JORDAN.replace("\"im\": [[0, 0], [0, 0]]", "\"im\": [[0, 0], [0]]");
        let err = parse_spec(short.as_bytes(), "j.json").unwrap_err();
        assert!(err.message.contains("generators[0].im[1]: expected 2 entries, found 1"), "{}", err.message);

        let schema = JORDAN.replace("\"v1\"", "\"v0\"");
        assert!(parse_spec(schema.as_bytes(), "j.json").unwrap_err().message.contains("schema"));

        let extra = JORDAN.replace("\"name\"", "\"colour\": 1, \"name\"");
        assert!(parse_spec(extra.as_bytes(), "j.json").unwrap_err().message.contains("colour"));
    }

    #[test]
    fn matrices_round_trip() {
        let m = Mat::from_fn(2, 2, |i, j| silov_core::C64::new(i as f64 - 0.25, j as f64 * 1e-17));
        assert_eq!(ComplexMatrix::from_mat(&m).to_mat().unwrap(), m);
    }
}
