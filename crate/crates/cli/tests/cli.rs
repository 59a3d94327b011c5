use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn silov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_silov")).args(args).env_remove("SILOV_TOL_PROFILE").output().expect("binary runs")
}

fn corpus(count: usize) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c");
    let out = silov(&["corpus", path.to_str().unwrap(), "--seed", "42", "--count", &count.to_string(), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (dir, path)
}

fn file(dir: &Path, name: &str) -> String {
    dir.join(format!("{name}.json")).to_str().unwrap().to_string()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn analyze_documented_examples() {
    let (_t, dir) = corpus(7);
    for (name, killed, prop, env) in [
        ("full_M2", json!([]), 1, json!([[2, 1]])),
        ("jordan_M2", json!([]), 2, json!([[2, 1]])),
        ("state_sum", json!([2]), 2, json!([[2, 1]])),
        ("full_M1", json!([]), 1, json!([[1, 1]])),
    ] {
        let out = silov(&["analyze", &file(&dir, name)]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let r = report(&out);
        assert_eq!(r["silov_killed"]["kernel_intersection"], killed, "{name}");
        assert_eq!(r["silov_killed"]["lattice"], killed, "{name}");
        assert_eq!(r["silov_killed"]["agree"], json!(true));
        assert_eq!(r["propagation"]["value"], json!(prop), "{name}");
        assert_eq!(r["envelope_blocks"], env, "{name}");
        assert_eq!(r["status"]["exit_code"], json!(0));
        assert_eq!(r["schema"], json!("v1"));
        assert!(r.get("timing_ms").is_none());
        for u in r["certificates"]["uniqueness"].as_array().unwrap() {
            assert!(!u["payload"].as_array().unwrap().is_empty(), "{name}: {u}");
        }
    }
}

#[test]
fn state_sum_certificates_carry_the_second_state() {
    let (_t, dir) = corpus(7);
    let r = report(&silov(&["analyze", &file(&dir, "state_sum")]));
    assert_eq!(r["blocks"], json!([[2, 1], [1, 1]]));
    assert_eq!(r["boundary_reps"], json!([1]));
    let u = r["certificates"]["uniqueness"].as_array().unwrap();
    assert_eq!(u[1]["unique"], json!(false));
    // A second state on M2 ⊕ C, as one Choi block per source block.
    let witness = u[1]["payload"].as_array().unwrap();
    assert!(!witness.is_empty());
    for c in witness {
        let (rows, cols) = (c["rows"].as_u64().unwrap(), c["cols"].as_u64().unwrap());
        assert_eq!(rows, cols);
        assert_eq!(c["re"].as_array().unwrap().len() as u64, rows * cols);
    }
    let ideals = r["certificates"]["ideals"].as_array().unwrap();
    let passing: Vec<&Value> = ideals.iter().filter(|d| d["boundary"] == json!(true)).map(|d| &d["killed"]).collect();
    assert_eq!(passing, vec![&json!([]), &json!([2])]);
}

#[test]
fn tensor_documented_examples() {
    let (_t, dir) = corpus(7);
    for (a, b, killed) in [
        ("state_sum", "jordan_M2", json!([[2, 1]])),
        ("full_M2", "full_M2", json!([])),
        ("state_sum", "state_sum", json!([[1, 2], [2, 1], [2, 2]])),
    ] {
        let out = silov(&["tensor", &file(&dir, a), &file(&dir, b)]);
        assert_eq!(out.status.code(), Some(0), "{a} {b}: {}", String::from_utf8_lossy(&out.stdout));
        let r = report(&out);
        let m = &r["main_theorem"];
        assert_eq!(m["silov_kernel_intersection"], killed);
        assert_eq!(m["silov_lattice"], killed);
        assert_eq!(m["expected"], killed);
        for check in [&m["passed"], &r["hopenwasser"]["passed"], &r["power_tensor"]["passed"], &r["prop_max"]["passed"]] {
            assert_eq!(check, &json!(true), "{a} {b}");
        }
        let n_max = r["power_tensor"]["n_max"].as_u64().unwrap();
        assert_eq!(n_max, r["prop_max"]["expected"].as_u64().unwrap() + 1);
    }
}

#[test]
fn tensor_over_the_ambient_cap_is_an_input_error() {
    let (_t, dir) = corpus(7);
    let out = silov(&["tensor", &file(&dir, "state_sum"), &file(&dir, "state_sum"), "--max-ambient-product", "8", "--quiet"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn corpus_is_deterministic() {
    let (_a, x) = corpus(10);
    let (_b, y) = corpus(10);
    let mut names: Vec<String> = std::fs::read_dir(&x).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 11);
    assert!(names.contains(&"manifest.json".to_string()));
    for n in &names {
        assert_eq!(std::fs::read(x.join(n)).unwrap(), std::fs::read(y.join(n)).unwrap(), "{n}");
    }
    let m: Value = serde_json::from_slice(&std::fs::read(x.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], json!(42));
    assert_eq!(m["systems"].as_array().unwrap().len(), 10);

    let (_c, z) = corpus(0);
    let names: Vec<_> = std::fs::read_dir(&z).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("manifest.json")]);
}

#[test]
fn jordan_family_has_zero_silov_ideal() {
    let (_t, dir) = corpus(10);
    for name in ["jordan_M2", "jordan_M3", "jordan_M3_k2", "jordan_M4_k3"] {
        let r = report(&silov(&["analyze", &file(&dir, name)]));
        assert_eq!(r["silov_killed"]["lattice"], json!([]), "{name}");
        assert_eq!(r["silov_killed"]["agree"], json!(true), "{name}");
    }
}

#[test]
fn verify_all_rejects_broken_corpora() {
    let empty = TempDir::new().unwrap();
    let out = silov(&["verify-all", empty.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest"));

    let (_t, dir) = corpus(4);
    std::fs::write(dir.join("jordan_M2.json"), b"{\"schema\": \"v1\", \"name\": ").unwrap();
    let summary = dir.join("summary.json");
    let out = silov(&["verify-all", dir.to_str().unwrap(), "--json-out", summary.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("jordan_M2.json"), "{table}");
    let s: Value = serde_json::from_slice(&std::fs::read(&summary).unwrap()).unwrap();
    assert_eq!(s["status"]["exit_code"], json!(1));
    assert_eq!(s["systems"][0]["outcome"], json!("ok"));
    assert_eq!(s["systems"][3]["outcome"], json!("input"));
}

#[test]
fn parse_errors_name_line_and_field() {
    let t = TempDir::new().unwrap();
    let p = t.path().join("bad.json");
    std::fs::write(&p, "{\n  \"schema\": \"v1\",\n  \"name\": \"x\",\n  \"ambient_dim\": \"two\",\n  \"generators\": []\n}\n").unwrap();
    let out = silov(&["analyze", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains("line 4") && err.contains("ambient_dim"), "{err}");
}

#[test]
fn flags_are_echoed_and_override_the_profile() {
    let (_t, dir) = corpus(2);
    let json_out = dir.join("r.json");
    let out = Command::new(env!("CARGO_BIN_EXE_silov"))
        .args(["analyze", &file(&dir, "full_M2"), "--seed", "7", "--tol-sep", "2e-6", "--falsifier-trials", "50"])
        .args(["--json-out", json_out.to_str().unwrap()])
        .env("SILOV_TOL_PROFILE", "strict")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let s = &r["settings"];
    assert_eq!(s["seed"], json!(7));
    assert_eq!(s["profile"], json!("strict"));
    assert_eq!(s["tolerances"]["sep"], json!(2e-6));
    assert_eq!(s["tolerances"]["rank"], json!(1e-10));
    assert_eq!(s["falsifier_trials"], json!(50));
    assert_eq!(s["uniqueness_trials"], json!(32));
    assert_eq!(s["max_ambient_product"], json!(36));
    assert_eq!(std::fs::read(&json_out).unwrap(), out.stdout);

    let quiet = silov(&["analyze", &file(&dir, "full_M2"), "--quiet"]);
    assert_eq!(quiet.status.code(), Some(0));
    assert!(quiet.stdout.is_empty());

    let bad = silov(&["analyze", &file(&dir, "full_M2"), "--tol-rank=-1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("tolerances"));
    let usage = silov(&["analyze", &file(&dir, "full_M2"), "--no-such-flag"]);
    assert_eq!(usage.status.code(), Some(1));
}

#[test]
fn timing_is_opt_in() {
    let (_t, dir) = corpus(1);
    let r = report(&silov(&["analyze", &file(&dir, "full_M1"), "--timing"]));
    assert!(r["timing_ms"].as_object().is_some_and(|m| m.contains_key("decompose")));
    let a = silov(&["analyze", &file(&dir, "full_M1")]);
    let b = silov(&["analyze", &file(&dir, "full_M1")]);
    assert_eq!(a.stdout, b.stdout);
}
