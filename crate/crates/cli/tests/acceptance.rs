//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Pass criterion numbers as arguments to run a subset.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use serde_json::Value;
use silov_cli::spec::load_spec;
use silov_core::boundary::{falsify_complete_isometry, silov_ideal_dk, silov_ideal_lattice, SearchParams};
use silov_core::linalg::{herm_eig, kron, op_norm, span_of, Mat, C64};
use silov_core::opsys::{generated_cstar, opsys_from_generators};
use silov_core::propagation::propagation_number;
use silov_core::rng::{below, gauss_herm, gauss_mat, stream, Stream};
use silov_core::tensor::{kernel_of_tensor_quotients, lazar_seminorm, verify_lazar, verify_main_theorem, DEFAULT_AMBIENT_CAP};
use silov_core::wedderburn::{commutant, quotient_map, wedderburn_decompose};
use silov_core::{BlockIdeal, OperatorSystem, Tolerances};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn shipped_systems() -> Vec<(String, OperatorSystem)> {
    let manifest: Value = serde_json::from_slice(&std::fs::read(corpus_dir().join("manifest.json")).expect("shipped manifest")).unwrap();
    let t = Tolerances::default();
    manifest["systems"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            let l = load_spec(&corpus_dir().join(s["file"].as_str().unwrap())).expect("shipped spec parses");
            (l.spec.name.clone(), l.spec.to_system(&t).unwrap())
        })
        .collect()
}

fn x() -> Mat {
    Mat::unit(2, 0, 1)
}

fn m2() -> OperatorSystem {
    let units: Vec<Mat> = (0..4).map(|k| Mat::unit(2, k / 2, k % 2)).collect();
    opsys_from_generators(2, &units, &Tolerances::default()).unwrap()
}

fn ex() -> OperatorSystem {
    opsys_from_generators(2, &[x()], &Tolerances::default()).unwrap()
}

/// `span{1, (X, ½), (X, ½)*}` in `M_2 ⊕ C`.
fn ec() -> OperatorSystem {
    let mut g = Mat::zeros(3, 3);
    g[(0, 1)] = C64::new(1.0, 0.0);
    g[(2, 2)] = C64::new(0.5, 0.0);
    opsys_from_generators(3, &[g], &Tolerances::default()).unwrap()
}

fn pairs_of(ideal: &BlockIdeal, nb: usize) -> BTreeSet<(usize, usize)> {
    ideal.killed().iter().map(|k| (k / nb + 1, k % nb + 1)).collect()
}

fn criterion_1() -> Outcome {
    let t = Tolerances::default();
    let params = SearchParams::default();
    let start = Instant::now();
    let systems = [("M2", m2()), ("E_X", ex()), ("E_C", ec())];
    let mut lines = Vec::new();
    for a in 0..3 {
        for b in a..3 {
            // E_C goes first so the killed pairs read as documented.
            let (a, b) = if b == 2 && a != 2 { (b, a) } else { (a, b) };
            let ((na, e), (nb, f)) = (&systems[a], &systems[b]);
            let r = verify_main_theorem(e, f, &params, &t, DEFAULT_AMBIENT_CAP).map_err(|x| format!("({na},{nb}): {x}"))?;
            let blocks = r.right.algebra.num_blocks();
            let killed = pairs_of(&r.direct.silov, blocks);
            let want: BTreeSet<(usize, usize)> = match (*na, *nb) {
                ("E_C", "E_C") => [(1, 2), (2, 1), (2, 2)].into(),
                ("E_C", "E_X") => [(2, 1)].into(),
                ("E_C", "M2") => [(2, 1)].into(),
                _ => BTreeSet::new(),
            };
            check(r.passed(), || format!("({na},{nb}): {:?}", r.failures))?;
            check(r.routes_agree() && r.lattice.is_some(), || format!("({na},{nb}): lattice route missing or disagreeing"))?;
            check(r.direct.silov == r.expected, || format!("({na},{nb}): Šilov {killed:?} vs ker {:?}", pairs_of(&r.expected, blocks)))?;
            check(killed == want, || format!("({na},{nb}): killed {killed:?}, expected {want:?}"))?;
            check(r.envelope_blocks == r.expected_envelope_blocks, || format!("({na},{nb}): envelope blocks differ"))?;
            lines.push(format!("({na},{nb}) {killed:?}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs <= 60.0, || format!("took {secs:.1} s, budget 60 s"))?;
    Ok(format!("6 pairs in {secs:.1} s: {}", lines.join(", ")))
}

fn criterion_2() -> Outcome {
    let t = Tolerances::default();
    let systems = shipped_systems();
    check(systems.len() == 20, || format!("shipped corpus has {} systems", systems.len()))?;
    check(systems.iter().all(|(_, e)| e.ambient() <= 4), || "ambient above 4".into())?;
    let mut checked = 0;
    for (name, e) in &systems {
        let mut killed_shape = None;
        for seed in 1..=3u64 {
            let params = SearchParams::default().with_seed(seed);
            let w = wedderburn_decompose(&generated_cstar(e, &t).unwrap(), seed, &t).map_err(|x| format!("{name}: {x}"))?;
            let dk = silov_ideal_dk(e, &w, &params, &t).map_err(|x| format!("{name} seed {seed}: kernel intersection: {x}"))?;
            let lat = silov_ideal_lattice(e, &w, &params, &t).map_err(|x| format!("{name} seed {seed}: lattice: {x}"))?;
            check(dk.silov == lat.silov, || {
                format!("{name} seed {seed}: kernel intersection {:?} vs lattice {:?}", dk.silov.one_based(), lat.silov.one_based())
            })?;
            // Block labels can permute between seeds; compare the shapes of
            // the killed blocks instead.
            let mut shape: Vec<(usize, usize)> = dk.silov.killed().iter().map(|&i| (w.blocks()[i].dim, w.blocks()[i].mult)).collect();
            shape.sort_unstable();
            match &killed_shape {
                None => killed_shape = Some(shape),
                Some(s) => check(s == &shape, || format!("{name}: killed blocks {shape:?} at seed {seed}, {s:?} at seed 1"))?,
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} route comparisons (20 systems x seeds 1,2,3) agree"))
}

struct Shipped {
    summary_bytes: Vec<u8>,
    reports: Vec<(String, Vec<u8>)>,
    exit: Option<i32>,
}

fn run_verify_all(tag: &str) -> Shipped {
    let out = tempfile::TempDir::new().unwrap();
    let summary = out.path().join(format!("summary-{tag}.json"));
    let reports = out.path().join("reports");
    let status = Command::new(env!("CARGO_BIN_EXE_silov"))
        .arg("verify-all")
        .arg(corpus_dir())
        .args(["--seed", "1", "--quiet", "--json-out"])
        .arg(&summary)
        .arg("--report-dir")
        .arg(&reports)
        .env_remove("SILOV_TOL_PROFILE")
        .status()
        .expect("binary runs");
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&reports)
        .map(|d| {
            d.map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect()
        })
        .unwrap_or_default();
    files.sort();
    Shipped { summary_bytes: std::fs::read(&summary).unwrap_or_default(), reports: files, exit: status.code() }
}

fn shipped() -> &'static Shipped {
    static FIRST: OnceLock<Shipped> = OnceLock::new();
    FIRST.get_or_init(|| run_verify_all("first"))
}

fn shipped_summary() -> Result<Value, String> {
    let s = shipped();
    check(s.exit == Some(0), || format!("verify-all exited with {:?}", s.exit))?;
    serde_json::from_slice(&s.summary_bytes).map_err(|e| format!("summary: {e}"))
}

fn pair_reports(summary: &Value) -> Result<Vec<(String, &Value)>, String> {
    summary["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            let label = format!("({},{})", p["left"].as_str().unwrap(), p["right"].as_str().unwrap());
            if p["report"].is_null() {
                Err(format!("{label}: no report"))
            } else {
                Ok((label, &p["report"]))
            }
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let s = shipped_summary()?;
    let pairs = pair_reports(&s)?;
    let mut cases = BTreeSet::new();
    for (label, r) in &pairs {
        let pm = &r["prop_max"];
        let (l, rr, p) = (pm["left"]["value"].as_u64().unwrap(), pm["right"]["value"].as_u64().unwrap(), pm["product"]["value"].as_u64().unwrap());
        check(p == l.max(rr) && pm["passed"] == Value::Bool(true), || format!("{label}: prop {p} vs max({l},{rr})"))?;
        cases.insert((l.min(rr), l.max(rr)));
    }
    check(pairs.len() >= 8, || format!("only {} pairs", pairs.len()))?;
    check(cases.contains(&(1, 2)) && cases.contains(&(2, 2)), || format!("cases covered: {cases:?}"))?;
    let t = Tolerances::default();
    for d in 1..=3 {
        let units: Vec<Mat> = (0..d * d).map(|k| Mat::unit(d, k / d, k % d)).collect();
        let e = opsys_from_generators(d, &units, &t).unwrap();
        let p = propagation_number(&e, &SearchParams::default(), &t).map_err(|x| format!("M_{d}: {x}"))?;
        check(p.value == 1, || format!("prop(M_{d}) = {}", p.value))?;
    }
    Ok(format!("{} pairs exact, (min,max) cases {cases:?}; prop(M_d) = 1 for d = 1,2,3", pairs.len()))
}

fn criterion_4() -> Outcome {
    let s = shipped_summary()?;
    check(s["settings"]["tolerances"]["rank"].as_f64() == Some(1e-9), || "tol_rank is not 1e-9".into())?;
    let pairs = pair_reports(&s)?;
    let mut steps = 0;
    for (label, r) in &pairs {
        let pt = &r["power_tensor"];
        let want = r["prop_max"]["expected"].as_u64().unwrap() + 1;
        check(pt["n_max"].as_u64() == Some(want), || format!("{label}: n_max {} vs prop+1 = {want}", pt["n_max"]))?;
        for st in pt["steps"].as_array().unwrap() {
            check(st["equal"] == Value::Bool(true), || format!("{label}: spans differ at {st}"))?;
            check(st["tensor_of_powers"] == st["power_of_tensor"], || format!("{label}: {st}"))?;
            steps += 1;
        }
    }
    Ok(format!("{} pairs, {steps} span equalities up to prop+1", pairs.len()))
}

fn random_ideal(s: &mut Stream, n: usize) -> BlockIdeal {
    let mask = below(s, 1 << n);
    BlockIdeal::with_blocks(n, (0..n).filter(|i| mask >> i & 1 == 1)).unwrap()
}

fn intersect(family: &[BlockIdeal], n: usize) -> BlockIdeal {
    let mut acc: BTreeSet<usize> = (0..n).collect();
    for k in family {
        acc = acc.intersection(k.killed()).copied().collect();
    }
    BlockIdeal::with_blocks(n, acc).unwrap()
}

fn criterion_5() -> Outcome {
    let mut s = stream(505, &[]);
    for draw in 0..100 {
        let ks: Vec<BlockIdeal> = (0..1 + below(&mut s, 4)).map(|_| random_ideal(&mut s, 3)).collect();
        let ls: Vec<BlockIdeal> = (0..1 + below(&mut s, 3)).map(|_| random_ideal(&mut s, 2)).collect();
        let r = verify_lazar(3, 2, &ks, &ls).map_err(|x| format!("draw {draw}: {x}"))?;
        check(r.passed(), || format!("draw {draw}: {ks:?} {ls:?}"))?;
        // Independent count: (a, b) is killed by every q_K ⊗ q_L iff a ∈ K
        // or b ∈ L for all K, L.
        let brute: BTreeSet<usize> =
            (0..6).filter(|&p| ks.iter().all(|k| ls.iter().all(|l| k.contains_block(p / 2) || l.contains_block(p % 2)))).collect();
        check(r.rhs.killed() == &brute, || format!("draw {draw}: rhs {:?} vs brute force {brute:?}", r.rhs))?;
        check(r.lhs == kernel_of_tensor_quotients(&intersect(&ks, 3), 3, &intersect(&ls, 2), 2).unwrap(), || format!("draw {draw}: lhs"))?;
    }

    let (da, db) = ([2usize, 1, 1], [2usize, 1]);
    let ideal = |n: usize, k: &[usize]| BlockIdeal::with_blocks(n, k.iter().copied()).unwrap();
    let configs = [
        (vec![ideal(3, &[0]), ideal(3, &[1, 2])], vec![ideal(2, &[0]), ideal(2, &[1])]),
        (vec![ideal(3, &[2])], vec![ideal(2, &[])]),
        (vec![ideal(3, &[0, 2]), ideal(3, &[1, 2])], vec![ideal(2, &[1])]),
    ];
    let mut worst = 0.0f64;
    for (ks, ls) in &configs {
        let (i, j) = (intersect(ks, 3), intersect(ls, 2));
        let kept = |d: &[usize], id: &BlockIdeal| -> Vec<usize> { (0..d.len()).filter(|b| !id.contains_block(*b)).map(|b| d[b]).collect() };
        let (ka, kb) = (kept(&da, &i), kept(&db, &j));
        for _ in 0..100 {
            let mut x = Mat::zeros(ka.iter().sum::<usize>() * kb.iter().sum::<usize>(), ka.iter().sum::<usize>() * kb.iter().sum::<usize>());
            for _ in 0..3 {
                let a = Mat::direct_sum(&ka.iter().map(|&d| gauss_mat(&mut s, d, d)).collect::<Vec<_>>());
                let b = Mat::direct_sum(&kb.iter().map(|&d| gauss_mat(&mut s, d, d)).collect::<Vec<_>>());
                x = &x + &a.kron(&b);
            }
            let n = lazar_seminorm(&da, &db, &i, &j, ks, ls, &x).map_err(|e| e.to_string())?;
            let err = (n - op_norm(&x)).abs() / (1.0 + n);
            worst = worst.max(err);
            check(err <= 1e-9, || format!("seminorm {n} vs op norm {}", op_norm(&x)))?;
        }
    }
    Ok(format!("100 families over 3x2 blocks; seminorm = op norm on 300 elements (max rel. err {worst:.1e})"))
}

fn criterion_6() -> Outcome {
    let s = shipped_summary()?;
    let pairs = pair_reports(&s)?;
    let mut decided = 0;
    for (label, r) in &pairs {
        let h = &r["hopenwasser"];
        let list = h["pairs"].as_array().unwrap();
        check(!list.is_empty(), || format!("{label}: no boundary-representation pairs"))?;
        for p in list {
            check(p["unique"] == Value::Bool(true), || format!("{label}: pair {} has a second extension", p["pair"]))?;
            check(!p["payload"].as_array().unwrap().is_empty(), || format!("{label}: empty certificate"))?;
        }
        decided += list.len();
    }
    Ok(format!("{decided} boundary-representation pairs unique across {} corpus pairs", pairs.len()))
}

fn criterion_7() -> Outcome {
    let t = Tolerances::default();
    let e = ec();
    let w = wedderburn_decompose(&generated_cstar(&e, &t).unwrap(), 1, &t).unwrap();
    check(w.blocks()[0].dim == 2 && w.blocks()[1].dim == 1, || "unexpected block order".into())?;
    let drop = quotient_map(&w, &BlockIdeal::new(&w, [0]).unwrap()).unwrap();
    let keep = quotient_map(&w, &BlockIdeal::new(&w, [1]).unwrap()).unwrap();
    let mut smallest = f64::INFINITY;
    for seed in 1..=10 {
        let c = falsify_complete_isometry(&e, &drop, 1000, seed, &t).ok_or_else(|| format!("seed {seed}: no counterexample for killed = {{1}}"))?;
        let gap = c.norm_x - c.norm_image;
        smallest = smallest.min(gap);
        check(gap >= 0.5 - t.norm, || format!("seed {seed}: gap {gap}"))?;
        check(falsify_complete_isometry(&e, &keep, 1000, seed, &t).is_none(), || format!("seed {seed}: spurious drop for killed = {{2}}"))?;
    }
    Ok(format!("killed {{1}}: drop found in 10/10 seeds (smallest gap {smallest:.6}); killed {{2}}: none in 10 x 1000 trials"))
}

fn criterion_8() -> Outcome {
    let t = Tolerances::default();
    let systems = shipped_systems();
    for (name, e) in &systems {
        let a = generated_cstar(e, &t).unwrap();
        let comm = commutant(&a, &t).dim();
        let mut first = None;
        for seed in 1..=3 {
            let w = wedderburn_decompose(&a, seed, &t).map_err(|x| format!("{name}: {x}"))?;
            let sum_d2: usize = w.blocks().iter().map(|b| b.dim * b.dim).sum();
            let sum_m2: usize = w.blocks().iter().map(|b| b.mult * b.mult).sum();
            check(sum_d2 == a.dim(), || format!("{name}: sum d^2 = {sum_d2}, dim A = {}", a.dim()))?;
            check(sum_m2 == comm, || format!("{name}: sum m^2 = {sum_m2}, commutant dim = {comm}"))?;
            let ms = w.block_multiset();
            match &first {
                None => first = Some(ms),
                Some(f) => check(f == &ms, || format!("{name}: block multiset changes with the seed"))?,
            }
        }
    }

    let mut s = stream(808, &[]);
    for draw in 0..1000usize {
        let n = 2 + draw % 3;
        let count = 1 + draw % (n * n + 2);
        let gens: Vec<Mat> = (0..count).map(|_| gauss_mat(&mut s, n, n)).collect();
        let sp = span_of(&gens, n, &t).map_err(|x| x.to_string())?;
        check(sp.dim() == count.min(n * n), || format!("Gram-Schmidt draw {draw}: dim {}", sp.dim()))?;
        for (i, a) in sp.basis().iter().enumerate() {
            for (j, b) in sp.basis().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                check((a.hs_inner(b).unwrap() - C64::new(want, 0.0)).norm() <= t.ortho, || format!("Gram-Schmidt draw {draw}"))?;
            }
        }
    }
    for draw in 0..1000usize {
        let (p, q) = (1 + draw % 4, 1 + (draw / 4) % 4);
        let (a, b) = (gauss_mat(&mut s, p, p), gauss_mat(&mut s, q, q));
        let (lhs, rhs) = (op_norm(&kron(&a, &b)), op_norm(&a) * op_norm(&b));
        check((lhs - rhs).abs() <= 1e-10 * rhs, || format!("kron norm draw {draw}: {lhs} vs {rhs}"))?;
    }
    for draw in 0..1000usize {
        let a = gauss_herm(&mut s, 1 + draw % 8);
        let eig = herm_eig(&a, t.herm).map_err(|x| x.to_string())?;
        let res = (&eig.rebuild(|l| l) - &a).hs_norm();
        check(res <= 1e-10 * op_norm(&a), || format!("eigensolver draw {draw}: residual {res:e}"))?;
    }
    Ok(format!("{} systems x 3 seeds; 1000 draws each for Gram-Schmidt, kron norm, eigensolver", systems.len()))
}

fn criterion_9() -> Outcome {
    let first = shipped();
    check(first.exit == Some(0), || format!("first run exited with {:?}", first.exit))?;
    let second = run_verify_all("second");
    check(!first.summary_bytes.is_empty() && !first.reports.is_empty(), || "first run wrote nothing".into())?;
    check(first.summary_bytes == second.summary_bytes, || "summaries differ between runs".into())?;
    check(first.reports == second.reports, || "per-file reports differ between runs".into())?;
    Ok(format!("summary ({} bytes) and {} report files identical across two runs", first.summary_bytes.len(), first.reports.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("main theorem on the six small pairs", criterion_1),
        ("Šilov routes agree on the corpus, seeds 1-3", criterion_2),
        ("propagation number of a tensor product is the max", criterion_3),
        ("powers commute with tensoring up to prop+1", criterion_4),
        ("ideal families and the seminorm", criterion_5),
        ("tensors of boundary representations", criterion_6),
        ("falsifier calibration on the state sum", criterion_7),
        ("structural invariants", criterion_8),
        ("verify-all is byte-deterministic", criterion_9),
    ];
    let only: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    // Keep panics from individual criteria on one line.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (title, f)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {id} {title} ({secs:.1} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} {title} ({secs:.1} s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
