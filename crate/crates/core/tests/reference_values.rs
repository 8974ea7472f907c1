//! Values computed independently with a dense permutation-average reference
//! implementation in numpy.

use symbroadcast::channels::product_state;
use symbroadcast::{
    apply, approx_reduced_general, approx_reduced_symmetric, noisy_cloner, partial_trace,
    purify_perm_invariant, single_user_fidelities, trace_distance, universal_cloner, Complex64,
    FactorSubset, Operator,
};

fn zero_ket() -> Operator {
    Operator::basis_ket(0, vec![2]).unwrap()
}

fn marginal_gap(out: &Operator, k: usize, general: bool) -> (f64, Operator) {
    let tilde = if general {
        approx_reduced_general(out, k).unwrap().tilde_rho_k
    } else {
        approx_reduced_symmetric(out, k).unwrap().tilde_rho_k
    };
    let marginal = partial_trace(out, &FactorSubset::first(k)).unwrap();
    (trace_distance(&marginal, &tilde).unwrap(), tilde)
}

#[test]
fn universal_cloner_table() {
    let rows = [
        ((1, 2, 2), 5.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0),
        ((1, 3, 2), 7.0 / 9.0, 2.0 / 3.0, 2.0 / 9.0),
        ((2, 3, 2), 11.0 / 12.0, 3.0 / 4.0, 1.0 / 3.0),
        ((2, 4, 2), 7.0 / 8.0, 3.0 / 4.0, 1.0 / 4.0),
        ((1, 2, 3), 3.0 / 4.0, 1.0 / 2.0, 1.0 / 2.0),
    ];
    for ((n, m, d), f_clon, f_tilde, delta) in rows {
        let ch = universal_cloner::<f64>(d, n, m).unwrap();
        let phi = Operator::basis_ket(0, vec![d]).unwrap();
        let f = single_user_fidelities(&ch, &phi).unwrap();
        assert!((f.f_clon - f_clon).abs() < 1e-12, "{n},{m},{d}");
        assert!((f.f_tilde - f_tilde).abs() < 1e-12, "{n},{m},{d}");
        assert!((f.distance - delta).abs() < 1e-12, "{n},{m},{d}");
    }
}

#[test]
fn cloner_distances_over_k() {
    let ch = universal_cloner::<f64>(2, 1, 3).unwrap();
    let out = apply(&ch, &ch.pure_input(&zero_ket()).unwrap()).unwrap();
    for (k, want) in [(1, 2.0 / 9.0), (2, 2.0 / 9.0), (3, 4.0 / 15.0)] {
        assert!((marginal_gap(&out, k, false).0 - want).abs() < 1e-12, "k={k}");
    }

    let phi = Operator::ket(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)], vec![2]).unwrap();
    let out = apply(&ch, &ch.pure_input(&phi).unwrap()).unwrap();
    for k in [1, 2] {
        assert!((marginal_gap(&out, k, false).0 - 2.0 / 9.0).abs() < 1e-12, "k={k}");
    }
}

#[test]
fn noisy_cloner_general_route() {
    let rows = [
        (2, 1, 0.4, 0.6),
        (2, 2, 0.466666666666667, 0.400833333333333),
        (3, 1, 0.285714285714285, 0.607142857142857),
        (3, 2, 0.348214285714286, 0.409017857142857),
    ];
    for (m, k, delta, tilde00) in rows {
        let ch = noisy_cloner::<f64>(2, 1, m, 0.1).unwrap();
        let out = apply(&ch, &ch.pure_input(&zero_ket()).unwrap()).unwrap();
        let (dist, tilde) = marginal_gap(&out, k, true);
        assert!((dist - delta).abs() < 1e-12, "M={m} k={k}: {dist}");
        assert!((tilde.get(0, 0).re - tilde00).abs() < 1e-12, "M={m} k={k}");
    }
}

#[test]
fn general_route_on_symmetric_output() {
    let ch = universal_cloner::<f64>(2, 1, 2).unwrap();
    let out = apply(&ch, &ch.pure_input(&zero_ket()).unwrap()).unwrap();
    let (dist, _) = marginal_gap(&out, 1, true);
    assert!((dist - 4.0 / 9.0).abs() < 1e-12);
}

#[test]
fn purified_product_state() {
    let sigma = Operator::diagonal(&[0.7, 0.3]);
    let rho = product_state(&[sigma.clone(), sigma.clone(), sigma]).unwrap();
    let pur = purify_perm_invariant(&rho, 1e-8).unwrap();
    assert!(pur.roundtrip_residual(&rho).unwrap() < 1e-12);
    assert!(pur.pair_permutation_residual().unwrap() < 1e-12);
}

#[test]
fn single_precision_agrees() {
    let ch = universal_cloner::<f32>(2, 1, 3).unwrap();
    let phi = symbroadcast::Operator32::basis_ket(0, vec![2]).unwrap();
    let f = single_user_fidelities(&ch, &phi).unwrap();
    assert!((f.f_clon - 7.0 / 9.0).abs() < 1e-5);
    assert!((f.distance - 2.0 / 9.0).abs() < 1e-4);
}
