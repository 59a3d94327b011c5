//! Corpus generation and the manifest that `verify-all` consumes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use silov_core::rng::{below, gauss_complex, gauss_mat, stream};
use silov_core::{Mat, C64};

use crate::io::write_atomic;
use crate::report::to_json;
use crate::settings::CliError;
use crate::spec::SystemSpec;

pub const MANIFEST: &str = "manifest.json";
/// Bumped whenever generated bytes change for a given seed.
pub const GENERATOR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    pub family: String,
    /// Seed the entry was drawn with; `None` for deterministic families.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: String,
    pub seed: u64,
    pub count: usize,
    pub generator_version: u32,
    pub systems: Vec<ManifestEntry>,
    /// Pairs of system names for the tensor checks.
    pub pairs: Vec<[String; 2]>,
}

/// Candidate pairs; a pair is listed only if both systems were generated.
const PAIRS: [(&str, &str); 8] = [
    ("full_M2", "full_M2"),
    ("full_M2", "jordan_M2"),
    ("full_M2", "state_sum"),
    ("jordan_M2", "jordan_M2"),
    ("state_sum", "jordan_M2"),
    ("state_sum", "state_sum"),
    ("full_M1", "state_sum"),
    ("full_M1", "jordan_M3"),
];

fn re(n: usize, f: impl Fn(usize, usize) -> f64) -> Mat {
    Mat::from_fn(n, n, |i, j| C64::new(f(i, j), 0.0))
}

/// The nilpotent shift `J` on `C^n`.
pub fn shift(n: usize) -> Mat {
    re(n, |i, j| if j == i + 1 { 1.0 } else { 0.0 })
}

fn full(d: usize) -> SystemSpec {
    let units: Vec<Mat> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|&(i, j)| i <= j).map(|(i, j)| Mat::unit(d, i, j)).collect();
    SystemSpec::new(format!("full_M{d}"), d, &units)
}

/// `span{I, J, J*, …, J^k, J*^k}` in `M_n`.
fn jordan(n: usize, k: usize) -> SystemSpec {
    let j = shift(n);
    let mut powers = vec![j.clone()];
    for _ in 1..k {
        let next = powers.last().unwrap() * &j;
        powers.push(next);
    }
    let name = if k == 1 { format!("jordan_M{n}") } else { format!("jordan_M{n}_k{k}") };
    SystemSpec::new(name, n, &powers)
}

/// `span{1, (J, ψ(J)), (J, ψ(J))*}` in `M_k ⊕ C` for a vector state `ψ`.
fn state_sum(name: String, k: usize, v: &[C64]) -> SystemSpec {
    let j = shift(k);
    // ψ(J) = <Jv, v>
    let lambda: C64 = (0..k).map(|a| (0..k).map(|b| v[a].conj() * j[(a, b)] * v[b]).sum::<C64>()).sum();
    let g = Mat::from_fn(k + 1, k + 1, |a, b| {
        if a < k && b < k {
            j[(a, b)]
        } else if a == k && b == k {
            lambda
        } else {
            C64::new(0.0, 0.0)
        }
    });
    SystemSpec::new(name, k + 1, &[g])
}

fn canonical_state_sum() -> SystemSpec {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    state_sum("state_sum".into(), 2, &[C64::new(h, 0.0), C64::new(h, 0.0)])
}

fn seeded_state_sum(seed: u64, j: usize) -> SystemSpec {
    let mut rng = stream(seed, &[0x5354_4154, j as u64]);
    let k = 2 + below(&mut rng, 2);
    let mut v: Vec<C64> = (0..k).map(|_| gauss_complex(&mut rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    state_sum(format!("state_sum_s{j}"), k, &v)
}

fn random_system(seed: u64, j: usize) -> SystemSpec {
    let mut rng = stream(seed, &[0x5241_4e44, j as u64]);
    let n = 2 + below(&mut rng, 3);
    let g = 2 + below(&mut rng, 2);
    let gens: Vec<Mat> = (0..g).map(|_| gauss_mat(&mut rng, n, n)).collect();
    SystemSpec::new(format!("random_{j}"), n, &gens)
}

/// The first `count` systems of the corpus, with their family and seed.
pub fn generate(seed: u64, count: usize) -> Vec<(SystemSpec, &'static str, Option<u64>)> {
    let mut out: Vec<(SystemSpec, &'static str, Option<u64>)> = Vec::new();
    for d in 1..=3 {
        out.push((full(d), "full", None));
    }
    for n in 2..=4 {
        out.push((jordan(n, 1), "jordan", None));
    }
    out.push((canonical_state_sum(), "state_sum", None));
    for (n, k) in [(3, 2), (4, 2), (4, 3)] {
        out.push((jordan(n, k), "jordan", None));
    }
    let mut j = 0;
    while out.len() < count {
        out.push((seeded_state_sum(seed, j), "state_sum", Some(seed)));
        if out.len() < count {
            out.push((random_system(seed, j), "random", Some(seed)));
        }
        j += 1;
    }
    out.truncate(count);
    out
}

pub fn manifest(seed: u64, count: usize) -> (Manifest, Vec<SystemSpec>) {
    let systems = generate(seed, count);
    let has = |name: &str| systems.iter().any(|(s, _, _)| s.name == name);
    let pairs = PAIRS.iter().filter(|(a, b)| has(a) && has(b)).map(|(a, b)| [a.to_string(), b.to_string()]).collect();
    let entries = systems
        .iter()
        .map(|(s, family, seed)| ManifestEntry { name: s.name.clone(), file: format!("{}.json", s.name), family: family.to_string(), seed: *seed })
        .collect();
    let m = Manifest { schema: crate::spec::SCHEMA.into(), seed, count, generator_version: GENERATOR_VERSION, systems: entries, pairs };
    (m, systems.into_iter().map(|(s, _, _)| s).collect())
}

/// Writes the spec files and the manifest, each atomically.
pub fn write_corpus(dir: &Path, seed: u64, count: usize) -> Result<Manifest, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    let (m, specs) = manifest(seed, count);
    for (entry, spec) in m.systems.iter().zip(&specs) {
        write_atomic(&dir.join(&entry.file), spec.to_json().as_bytes())?;
    }
    write_atomic(&dir.join(MANIFEST), to_json(&m).as_bytes())?;
    Ok(m)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST);
    let bytes = std::fs::read(&path).map_err(|e| CliError::input(format!("{}: missing or unreadable manifest: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    let m: Manifest = serde_path_to_error::deserialize(de).map_err(|e| {
        let path_in = e.path().to_string();
        CliError::input(format!("{}: field `{path_in}`: {}", path.display(), e.into_inner()))
    })?;
    if m.schema != crate::spec::SCHEMA {
        return Err(CliError::input(format!("{}: schema: expected \"{}\"", path.display(), crate::spec::SCHEMA)));
    }
    for [a, b] in &m.pairs {
        for name in [a, b] {
            if !m.systems.iter().any(|s| &s.name == name) {
                return Err(CliError::input(format!("{}: pair refers to unknown system `{name}`", path.display())));
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use silov_core::Tolerances;

    #[test]
    fn structured_families_have_expected_dimensions() {
        let tol = Tolerances::default();
        let dims: Vec<(String, usize)> = generate(1, 10).into_iter().map(|(s, _, _)| (s.name.clone(), s.to_system(&tol).unwrap().dim())).collect();
        let want = [
            ("full_M1", 1),
            ("full_M2", 4),
            ("full_M3", 9),
            ("jordan_M2", 3),
            ("jordan_M3", 3),
            ("jordan_M4", 3),
            ("state_sum", 3),
            ("jordan_M3_k2", 5),
            ("jordan_M4_k2", 5),
            ("jordan_M4_k3", 7),
        ];
        for ((name, dim), (wn, wd)) in dims.iter().zip(want) {
            assert_eq!((name.as_str(), *dim), (wn, wd));
        }
    }

    #[test]
    fn seeded_systems_stay_small_and_pairs_need_both_sides() {
        let (m, specs) = manifest(7, 20);
        assert_eq!(specs.len(), 20);
        assert!(specs.iter().all(|s| s.ambient_dim <= 4));
        assert_eq!(m.pairs.len(), 8);
        let (m, _) = manifest(7, 4);
        assert_eq!(m.pairs, vec![["full_M2".to_string(), "full_M2".to_string()], ["full_M2".into(), "jordan_M2".into()], [
            "jordan_M2".into(),
            "jordan_M2".into()
        ]]);
        assert!(manifest(7, 0).0.systems.is_empty());
    }
}
