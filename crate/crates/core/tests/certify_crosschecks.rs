use cosparse::certify::{self, NspWitness, Verdict};
use cosparse::instances;
use cosparse::operators::{self, AnalysisOperator};
use cosparse::theory::Subsets;
use cosparse::{numerics, seeding, Matrix, Vector};
use nalgebra::SymmetricEigen;

// Plain RIP of X by enumerating column subsets.
fn column_rip(x: &Matrix, s: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for cols in Subsets::new(x.ncols(), s) {
        let xs = x.select_columns(&cols);
        let eig = SymmetricEigen::new(xs.transpose() * &xs).eigenvalues;
        worst = eig.iter().fold(worst, |w, &e| w.max((e - 1.0).abs()));
    }
    worst
}

#[test]
fn identity_operator_reduces_to_column_rip() {
    let op = operators::make_identity(8).unwrap();
    for seed in 0..4 {
        let x = instances::make_design_matrix(6, 8, seed).unwrap();
        for s in 1..=4 {
            let drip = certify::drip_delta(&x, &op, s).unwrap().delta;
            assert!((drip - column_rip(&x, s)).abs() < 1e-10, "seed {seed} s {s}");
            // Null(I_Lambda) is the span of the remaining coordinates.
            let omega = certify::omega_rip_delta(&x, &op, 8 - s).unwrap().delta;
            assert!((omega - drip).abs() < 1e-10, "seed {seed} s {s}");
        }
    }
}

#[test]
fn random_directions_never_exceed_the_constants() {
    let mut rng = seeding::rng(17);
    let ops: Vec<AnalysisOperator> = vec![
        operators::make_fd_1d(8).unwrap(),
        operators::make_random_parseval_frame(10, 7, 4).unwrap(),
    ];
    for op in &ops {
        let d = op.d();
        let x = instances::make_design_matrix(d - 2, d, 21).unwrap();
        let dpinv = numerics::pseudoinverse(op.matrix()).unwrap();
        let s = 3;
        let drip = certify::drip_delta(&x, op, s).unwrap().delta;
        let l = d - 2;
        let omega = certify::omega_rip_delta(&x, op, l).unwrap().delta;
        for _ in 0..300 {
            let g = seeding::gaussian_vector(op.n(), &mut rng);
            let mut order: Vec<usize> = (0..op.n()).collect();
            order.sort_by(|&i, &j| g[i].total_cmp(&g[j]));
            let mut w = Vector::zeros(op.n());
            for &i in &order[..s] {
                w[i] = g[i];
            }
            let v = &dpinv * &w;
            if v.norm() > 1e-8 * w.norm() {
                let ratio = (&x * &v).norm_squared() / v.norm_squared();
                assert!((ratio - 1.0).abs() <= drip + 1e-10);
            }
            let cosupport: Vec<usize> = order[..l].to_vec();
            let basis = numerics::null_space_basis(&op.select_rows(&cosupport), 1e-10).unwrap();
            if basis.ncols() > 0 {
                let c = seeding::gaussian_vector(basis.ncols(), &mut rng);
                let v = &basis * c;
                let ratio = (&x * &v).norm_squared() / v.norm_squared();
                assert!((ratio - 1.0).abs() <= omega + 1e-10);
            }
        }
    }
}

#[test]
fn constants_grow_with_the_order() {
    let op = operators::make_random_parseval_frame(9, 6, 8).unwrap();
    let x = instances::make_design_matrix(4, 6, 8).unwrap();
    let drip: Vec<f64> = (1..=9).map(|s| certify::drip_delta(&x, &op, s).unwrap().delta).collect();
    assert!(drip.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{drip:?}");
    let omega: Vec<f64> = (0..6).map(|l| certify::omega_rip_delta(&x, &op, l).unwrap().delta).collect();
    assert!(omega.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{omega:?}");
}

#[test]
fn null_space_property_is_monotone_in_q() {
    // With nullity one the check is exhaustive, so the verdicts are exact.
    let mut compared = 0;
    for seed in 0..30u64 {
        let op = if seed % 2 == 0 {
            operators::make_fd_1d(8).unwrap()
        } else {
            operators::make_random_parseval_frame(10, 8, seed).unwrap()
        };
        let x = instances::make_design_matrix(7, 8, 100 + seed).unwrap();
        for k in 1..=3 {
            let hi = certify::dnspq_check(&x, &op, 0.9, k, 200, seed).unwrap();
            let lo = certify::dnspq_check(&x, &op, 0.4, k, 200, seed).unwrap();
            if hi.verdict == Verdict::Holds {
                compared += 1;
                assert_eq!(lo.verdict, Verdict::Holds, "seed {seed} k {k}");
            }
            if let Some(w) = &lo.witness {
                assert!(certify::verify_witness(&x, &op, 0.4, k, w));
            }
        }
    }
    assert!(compared > 0);
}

#[test]
fn tampered_witnesses_are_rejected() {
    let op = operators::make_fd_1d(6).unwrap();
    let x = instances::make_design_matrix(3, 6, 2).unwrap();
    let verdict = certify::dnspq_check(&x, &op, 1.0, 5, 400, 2).unwrap();
    let w = verdict.witness.expect("k = n - 1 leaves room for a violation");
    assert!(certify::verify_witness(&x, &op, 1.0, 5, &w));
    let mut off = w.v.clone();
    off[0] += 0.5;
    assert!(!certify::verify_witness(&x, &op, 1.0, 5, &NspWitness { v: off, t: w.t.clone() }));
    assert!(!certify::verify_witness(&x, &op, 1.0, w.t.len() - 1, &w));
    assert!(!certify::verify_witness(&x, &op, 1.0, 5, &NspWitness { v: vec![0.0; 6], t: vec![0] }));
}
