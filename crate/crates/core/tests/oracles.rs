use crn_detopt::engine::{
    build_certificate, build_t_eta, check_condition_i, interpolate_eta_zero, phi, EtaVector,
    HypothesisWitness,
};
use crn_detopt::linalg;
use crn_detopt::model::{Network, RateAssignment};
use crn_detopt::seqnet::{self, SeqParams};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `T_eta` of `K~(m, n)` at the closed-form weights, with `last` on the
/// final outflow.
fn t_matrix(p: &SeqParams, last: f64) -> nalgebra::DMatrix<f64> {
    let n = p.n();
    let mut eta = vec![p.lambda(); n];
    eta[n - 2] = (f64::from(p.m()) + 1.0) * p.lambda();
    eta.extend(std::iter::repeat_n(p.eps(), n - 1));
    eta.push(last);
    build_t_eta(&p.network(), &EtaVector::new(eta).unwrap()).unwrap()
}

fn leading_minor(t: &nalgebra::DMatrix<f64>, i: usize) -> f64 {
    linalg::determinant(&t.view((0, 0), (i, i)).into_owned())
}

#[test]
fn daleth_three_ways() {
    for eps in [0.1, 0.001, 0.5] {
        let p = SeqParams::new(2, 23, 1.0, eps, 1.0).unwrap();
        let t = t_matrix(&p, 1.0);
        let rec = seqnet::daleth_recurrence(1.0, eps, 20);
        for i in 0..=20 {
            let closed = seqnet::daleth_closed_form(1.0, eps, i).unwrap();
            let minor = leading_minor(&t, i);
            assert!(
                rel(closed, rec[i]) < 1e-10,
                "eps {eps}, i {i}: {closed} vs {}",
                rec[i]
            );
            assert!(
                rel(minor, rec[i]) < 1e-10,
                "eps {eps}, i {i}: {minor} vs {}",
                rec[i]
            );
        }
    }
    for n in [3, 5, 7, 9, 11] {
        for m in [2, 3, 7] {
            let p = SeqParams::defaults(m, n).unwrap();
            let full = seqnet::daleth_full(&p).values;
            let t = t_matrix(&p, 1.0);
            assert!(rel(full[n - 1], leading_minor(&t, n - 1)) < 1e-10);
        }
    }
}

#[test]
fn delta_closed_form_and_null_vector() {
    for n in [3, 5, 7, 9, 11] {
        for m in 2..=5 {
            let p = SeqParams::defaults(m, n).unwrap();
            let delta = seqnet::delta_recurrence(&p);
            for k in 1..n {
                let closed = seqnet::delta_closed_form(&p, k).unwrap();
                assert!(rel(closed, delta[k - 1]) < 1e-10, "n {n} m {m} k {k}");
            }
            let eta = seqnet::eta_zero_closed_form(&p).unwrap();
            let t = build_t_eta(&p.network(), &eta).unwrap();
            let td = &t * nalgebra::DVector::from_column_slice(&delta);
            let scale = linalg::matrix_inf_norm(&t) * linalg::max_abs(&delta);
            assert!(
                td.amax() <= 1e-12 * scale,
                "n {n} m {m}: {}",
                td.amax() / scale
            );
        }
    }
    let p = SeqParams::new(3, 11, 1.0, 0.001, 1.0).unwrap();
    for k in 1..=10 {
        let closed = seqnet::delta_closed_form(&p, k).unwrap();
        assert!(rel(closed, seqnet::delta_recurrence(&p)[k - 1]) < 1e-10);
    }
}

#[test]
fn bottom_row_expansion_matches_determinant() {
    for n in [3, 5, 7, 9, 11] {
        for m in [2, 3, 5, 10] {
            for eps in [0.1, 0.001] {
                let p = SeqParams::new(m, n, 1.0, eps, 1.0).unwrap();
                for last in [0.01, 0.3, 1.0, 4.0] {
                    let brute = linalg::determinant(&t_matrix(&p, last));
                    let expansion = seqnet::det_t_eta_zero_expansion(&p, last);
                    let scale = linalg::hadamard_bound(&t_matrix(&p, last));
                    assert!(
                        (brute - expansion).abs() <= 1e-12 * scale,
                        "n {n} m {m} eps {eps} last {last}: {brute} vs {expansion}"
                    );
                }
            }
        }
    }
}

#[test]
fn expansion_vanishes_at_closed_form_eta() {
    for n in [3, 5, 7, 9, 11] {
        for m in 2..=10 {
            let p = SeqParams::defaults(m, n).unwrap();
            let eta = seqnet::eta_zero_closed_form(&p).unwrap();
            let last = eta[2 * n - 1];
            let d = seqnet::daleth_full(&p).values;
            let terms =
                (f64::from(m) + 1.0).powi(2) * d[n - 2] + (f64::from(m) + 1.0 + last) * d[n - 1];
            assert!(seqnet::det_t_eta_zero_expansion(&p, last).abs() <= 1e-12 * terms);
        }
    }
}

#[test]
fn determinant_formulas_match_numeric_jacobian() {
    let net = Network::sequestration(2, 3).unwrap();
    for m in 2..=100u32 {
        let net = if m == 2 {
            net.clone()
        } else {
            Network::sequestration(m, 3).unwrap()
        };
        let rates = seqnet::rates_n3(m).unwrap();
        let (d1, d2) = seqnet::jac_dets_n3_formula(m).unwrap();
        let num1 = net.jacobian_determinant(&rates, &[1.0; 3]).unwrap();
        let num2 = net
            .jacobian_determinant(&rates, &seqnet::x_sharp_n3(m).unwrap())
            .unwrap();
        assert!(rel(d1, num1) < 1e-10, "m {m}: {d1} vs {num1}");
        assert!(rel(d2, num2) < 1e-10, "m {m}: {d2} vs {num2}");
    }
}

#[test]
fn n3_rates_match_engine_certificate() {
    for m in 2..=40 {
        let p = SeqParams::defaults(m, 3).unwrap();
        let eta = seqnet::eta_zero_closed_form(&p).unwrap();
        let cert =
            build_certificate(&p.network(), &eta, &seqnet::delta_recurrence(&p), 1.0).unwrap();
        let literal = seqnet::rates_n3(m).unwrap();
        for (a, b) in cert.rates.iter().zip(literal.iter()) {
            assert!(rel(*a, *b) < 1e-12, "m {m}: {a} vs {b}");
        }
        let x = seqnet::x_sharp_n3(m).unwrap();
        for (a, b) in cert.x_sharp.iter().zip(x) {
            assert!(rel(*a, b) < 1e-14);
        }
    }
}

#[test]
fn closed_form_rates_match_engine_certificate() {
    for n in [3, 5, 7, 9, 11] {
        for m in 2..=5 {
            let p = SeqParams::defaults(m, n).unwrap();
            let eta = seqnet::eta_zero_closed_form(&p).unwrap();
            let cert =
                build_certificate(&p.network(), &eta, &seqnet::delta_recurrence(&p), 1.0).unwrap();
            let closed = seqnet::closed_form_rates(&p).unwrap();
            for (a, b) in cert.rates.iter().zip(closed.iter()) {
                assert!(rel(*a, *b) < 1e-12, "n {n} m {m}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn determinant_signs_persist_to_200() {
    for m in 2..=200 {
        let (d1, d2) = seqnet::jac_dets_n3_formula(m).unwrap();
        assert!(d1 > 0.0 && d2 < 0.0, "m {m}: {d1}, {d2}");
    }
}

proptest! {
    #[test]
    fn t_eta_is_minus_jacobian_at_ones(
        m in 1u32..6,
        n in 2usize..8,
        seed in proptest::collection::vec(0.01f64..10.0, 16),
    ) {
        let net = Network::sequestration(m, n).unwrap();
        let weights = seed[..2 * n].to_vec();
        let t = build_t_eta(&net, &EtaVector::new(weights.clone()).unwrap()).unwrap();
        let mut rates = weights;
        rates.extend(std::iter::repeat_n(1.0, n));
        let jac = net.jacobian(&RateAssignment::new(rates).unwrap(), &vec![1.0; n]).unwrap();
        let scale = t.amax().max(1.0);
        prop_assert!((t + jac).amax() <= 1e-13 * scale);
    }

    #[test]
    fn phi_inverts_expm1(u in -50.0f64..50.0) {
        prop_assume!(u != 0.0);
        prop_assert!((phi(u) * u.exp_m1() - u).abs() <= 1e-12 * u.abs());
    }

    #[test]
    fn condition_i_ignores_eta_tilde(
        m in 2u32..10,
        half in 1usize..6,
        tilde in proptest::collection::vec(0.01f64..100.0, 11),
    ) {
        let n = 2 * half + 1;
        let net = Network::sequestration(m, n).unwrap();
        let ones = HypothesisWitness::internal(&net, vec![1.0; n]).unwrap();
        let other = HypothesisWitness::internal(&net, tilde[..n].to_vec()).unwrap();
        prop_assert_eq!(check_condition_i(&net, &ones), check_condition_i(&net, &other));
    }

    #[test]
    fn interpolated_eta_keeps_condition_ii(m in 2u32..8, half in 1usize..4) {
        let n = 2 * half + 1;
        let net = Network::sequestration(m, n).unwrap();
        let w = HypothesisWitness::sequestration(&net, m).unwrap();
        let em = crn_detopt::engine::construct_eta_minus(
            &net,
            &w,
            &crn_detopt::engine::default_lambda_grid(),
            &crn_detopt::engine::default_eps_grid(),
        )
        .unwrap();
        let ep = crn_detopt::engine::construct_eta_plus(&net).unwrap();
        let e0 = interpolate_eta_zero(&net, &em.eta, &ep.eta, 1e-10, 200).unwrap();
        let gamma = net.stoichiometric_matrix();
        let idx = net.non_inflow_indices();
        for i in 0..n {
            let s: f64 = idx.iter().zip(e0.iter()).map(|(&k, &w)| -(gamma[(i, k)] as f64) * w).sum();
            prop_assert!(s > 0.0);
        }
    }
}
