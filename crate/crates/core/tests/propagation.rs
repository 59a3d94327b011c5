use silov_core::boundary::SearchParams;
use silov_core::linalg::Mat;
use silov_core::opsys::{opsys_from_generators, power_span};
use silov_core::propagation::{propagation_in, propagation_number, verify_power_tensor, verify_prop_max};
use silov_core::tensor::{envelope_of, min_tensor};
use silov_core::{OperatorSystem, Tolerances};

fn x() -> Mat {
    Mat::unit(2, 0, 1)
}

fn sys(n: usize, gens: &[Mat]) -> OperatorSystem {
    opsys_from_generators(n, gens, &Tolerances::default()).unwrap()
}

fn full(d: usize) -> OperatorSystem {
    let gens: Vec<Mat> = (0..d).flat_map(|i| (0..d).map(move |j| Mat::unit(d, i, j))).collect();
    sys(d, &gens)
}

fn ex() -> OperatorSystem {
    sys(2, &[x()])
}

fn ec() -> OperatorSystem {
    sys(3, &[Mat::direct_sum(&[x(), Mat::diag_real(&[0.5])])])
}

#[test]
fn full_matrix_algebras_have_propagation_one() {
    let t = Tolerances::default();
    for d in 1..=3 {
        let r = propagation_number(&full(d), &SearchParams::default(), &t).unwrap();
        assert_eq!((r.value, r.chain.as_slice()), (1, &[d * d][..]));
    }
}

#[test]
fn chain_invariants_and_past_the_value() {
    let t = Tolerances::default();
    let p = SearchParams::default();
    for e in [ex(), ec(), full(2)] {
        let env = envelope_of(&e, &p, &t).unwrap();
        let r = propagation_in(&e, &env, &t).unwrap();
        assert!(r.chain.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*r.chain.last().unwrap(), r.envelope_dim);
        assert_eq!(r.chain.iter().position(|&c| c == r.envelope_dim), Some(r.value - 1));
        for k in r.value + 1..=r.value + 2 {
            assert_eq!(power_span(&env.embedded, k, &t).unwrap().dim(), r.envelope_dim);
        }
    }
}

#[test]
fn power_tensor_examples() {
    let t = Tolerances::default();
    let r = verify_power_tensor(&ex(), &ex(), 3, &t).unwrap();
    assert!(r.passed());
    assert_eq!(r.steps[1].power_of_tensor, 16);
    let r = verify_power_tensor(&ec(), &ex(), 3, &t).unwrap();
    assert!(r.passed());
    assert_eq!(r.steps[0].tensor_of_powers, 9);
    assert_eq!(r.steps[1].tensor_of_powers, 20);
    assert!(verify_power_tensor(&ex(), &ex(), 0, &t).is_err());
}

#[test]
fn prop_of_products_is_the_max() {
    let t = Tolerances::default();
    let p = SearchParams::default();
    for (e, f, want) in [(full(2), full(2), 1), (ec(), ex(), 2), (full(2), ex(), 2), (ex(), ex(), 2)] {
        let r = verify_prop_max(&e, &f, &p, &t).unwrap();
        assert!(r.passed(), "{}", r.describe());
        assert_eq!(r.product.value, want);
        assert!(r.product.value >= r.left.value);
        let product = min_tensor(&e, &f, &t).unwrap().product;
        assert_eq!(propagation_number(&product, &p, &t).unwrap().value, want);
    }
}
