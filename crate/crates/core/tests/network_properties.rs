use std::f64::consts::PI;

use evcs::network::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn splitter() -> impl Strategy<Value = BeamSplitterSpec> {
    (0.0..=1.0f64, -7.0..7.0f64, -7.0..7.0f64).prop_map(|(t, a, b)| BeamSplitterSpec::new(t, a, b).unwrap())
}

proptest! {
    #[test]
    fn bs_matrix_is_unitary(spec in splitter()) {
        prop_assert!(unitarity_residual2(&bs_matrix(&spec)) < 1e-14);
    }

    #[test]
    fn compose_q_is_the_embedded_product(bs1 in splitter(), bs2 in splitter()) {
        let q = compose_q(&bs1, &bs2);
        let product = matmul3(&embed_first(&bs1), &embed_second(&bs2));
        let m = q.matrix();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((m[i][j] - product[i][j]).norm() < 1e-13, "({}, {})", i, j);
            }
        }
        prop_assert!(q.unitarity_residual() < 1e-12);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| m[i][j].norm_sqr()).sum();
            let col: f64 = (0..3).map(|j| m[j][i].norm_sqr()).sum();
            prop_assert!((row - 1.0).abs() < 1e-12 && (col - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_t2_meets_condition(beta0 in 0.05..2.0f64, gamma0 in 0.05..2.0f64, t1 in 0.01..0.999f64) {
        let beta = Complex64::new(beta0, 0.0);
        let gamma = Complex64::from_polar(gamma0, PI);
        let bs1 = BeamSplitterSpec::plain(t1).unwrap();
        let t2 = solve_t2(beta, gamma, &bs1, 0.0, 0.0).unwrap();
        prop_assert!(t2 > 0.0 && t2 <= 1.0);
        let q = compose_q(&bs1, &BeamSplitterSpec::plain(t2).unwrap());
        prop_assert!(q.zero_sum(beta, gamma).norm() < 1e-12);
        prop_assert!((t2 - t2_closed_form_squared(beta0, gamma0, t1)).abs() < 1e-9);
    }
}

#[test]
fn closed_form_entries() {
    let (t1, t2) = (0.829, 0.740);
    let (r1, r2) = ((1.0f64 - t1 * t1).sqrt(), (1.0f64 - t2 * t2).sqrt());
    let (pt1, pr1, pt2, pr2) = (0.3, -0.8, 1.1, 2.0);
    let q = compose_q(
        &BeamSplitterSpec::new(t1, pt1, pr1).unwrap(),
        &BeamSplitterSpec::new(t2, pt2, pr2).unwrap(),
    );
    let a_u = Complex64::from_polar(t1 * t2, -(pt1 + pt2));
    let b_v = -Complex64::from_polar(r1 * r2, pr1 - pr2);
    let c_u = -Complex64::from_polar(r2, pr2);
    assert!((q.a_u - a_u).norm() < 1e-15);
    assert!((q.b_v - b_v).norm() < 1e-15);
    assert!((q.c_u - c_u).norm() < 1e-15);
}

#[test]
fn transparent_first_splitter_needs_transparent_second() {
    for (b, g) in [(0.5, 0.5), (1.3, 0.2), (0.1, 2.0)] {
        let t2 = solve_t2(
            Complex64::new(b, 0.0),
            Complex64::new(g, 0.0),
            &BeamSplitterSpec::plain(1.0).unwrap(),
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(t2, 1.0);
    }
}
