//! Dense oracles for the compact operators, the Thomas solver and one time step.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tfbs_core::spatial::{matrix_property_checks, thomas_solve, CompactOperator, TriDiag};
use tfbs_core::stepper::{assemble_system, rhs};

fn dense(m: &TriDiag) -> DMatrix<f64> {
    let rows = m.to_dense();
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn stencil(n: usize, lower: f64, centre: f64, upper: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            centre
        } else if j + 1 == i {
            lower
        } else if i + 1 == j {
            upper
        } else {
            0.0
        }
    })
}

struct Dense {
    h: DMatrix<f64>,
    a: DMatrix<f64>,
    s: DMatrix<f64>,
}

/// `A = tridiag(1,-2,1)`, `S = tridiag(-1,0,1)`, `H = A/12 + (hb/24a) S + I`.
fn dense_operators(a: f64, b: f64, m: usize) -> Dense {
    let n = m - 1;
    let h = 1.0 / m as f64;
    let second = stencil(n, 1.0, -2.0, 1.0);
    let first = stencil(n, -1.0, 0.0, 1.0);
    let avg = &second / 12.0 + &first * (h * b / (24.0 * a)) + DMatrix::identity(n, n);
    Dense {
        h: avg,
        a: second,
        s: first,
    }
}

fn sym_eigen_range(m: DMatrix<f64>) -> (f64, f64) {
    let eig = m.symmetric_eigen().eigenvalues;
    (eig.min(), eig.max())
}

#[test]
fn operators_match_definitions() {
    for (a, b) in [(0.5, -0.45), (0.5, 0.5), (1.0, 3.0)] {
        for m in [5, 8, 33] {
            let op = CompactOperator::new(a, b, 1.0 / m as f64, m).unwrap();
            let d = dense_operators(a, b, m);
            assert_relative_eq!(dense(op.averaging()), d.h, epsilon = 1e-15);
            assert_relative_eq!(dense(op.second_difference()), d.a, epsilon = 0.0);
            assert_relative_eq!(dense(op.first_difference()), d.s, epsilon = 0.0);
        }
    }
}

#[test]
fn rayleigh_sweep_lies_inside_the_spectrum() {
    for (a, b) in [(0.5, -0.45), (0.5, 0.5)] {
        for m in [8, 64] {
            let hh = 1.0 / m as f64;
            let op = CompactOperator::new(a, b, hh, m).unwrap();
            let d = dense_operators(a, b, m);
            let report = matrix_property_checks(&op, 200, 3);

            let (lo, hi) = sym_eigen_range(d.h.transpose() * &d.h);
            assert!(lo >= 5.0 / 12.0 - 1e-12 && hi <= 1.0 + 1e-12, "{lo} {hi}");
            assert!(report.hth_min >= lo - 1e-12 && report.hth_max <= hi + 1e-12);

            let ha = d.h.transpose() * &d.a + d.a.transpose() * &d.h;
            let (_, ha_top) = sym_eigen_range(0.5 * (&ha + ha.transpose()));
            assert!(ha_top <= 1e-12, "{ha_top}");
            assert!(report.ha_max <= ha_top + 1e-12);

            let hs = d.h.transpose() * &d.s + d.s.transpose() * &d.h;
            let comb = &ha * (a / (hh * hh)) + &hs * (b / (2.0 * hh));
            let (_, comb_top) = sym_eigen_range(0.5 * (&comb + comb.transpose()));
            assert!(comb_top <= 1e-10, "{comb_top}");
            assert!(report.combined_max <= comb_top + 1e-9);
        }
    }
}

#[test]
fn thomas_matches_lu() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2, 7, 50] {
        let sub: Vec<f64> = (0..n.max(1) - 1)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let sup: Vec<f64> = (0..n.max(1) - 1)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(2.5..4.0)).collect();
        let rhs_v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = TriDiag::new(sub, diag, sup).unwrap();
        let x = thomas_solve(&m, &rhs_v).unwrap();
        let oracle = dense(&m).lu().solve(&DVector::from_vec(rhs_v)).unwrap();
        for (p, q) in x.iter().zip(oracle.iter()) {
            assert_relative_eq!(p, q, epsilon = 1e-13);
        }
    }
}

#[test]
fn step_system_and_rhs_match_dense_formulas() {
    let (a, b, c) = (0.5, -0.45, 0.05);
    let m = 12;
    let hh = 1.0 / m as f64;
    let n = m - 1;
    let theta = 0.35;
    let kernel = 7.25;
    let op = CompactOperator::new(a, b, hh, m).unwrap();
    let d = dense_operators(a, b, m);
    let l = &d.h * c - &d.a * (a / (hh * hh) + b * b / (12.0 * a)) - &d.s * (b / (2.0 * hh));

    let system = dense(&assemble_system(kernel, &op, c, theta));
    assert_relative_eq!(system, &d.h * kernel + &l * (1.0 - theta), epsilon = 1e-10);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let (u_prev, hist, f) = (draw(), draw(), draw());
    let (f_left, f_right) = (0.8, -1.3);
    let got = rhs(kernel, &hist, &u_prev, &f, (f_left, f_right), &op, c, theta).unwrap();

    let u = DVector::from_vec(u_prev);
    let w = &u * kernel - DVector::from_vec(hist) + DVector::from_vec(f);
    let mut expected = &d.h * w - &l * &u * theta;
    expected[0] += (1.0 / 12.0 - hh * b / (24.0 * a)) * f_left;
    expected[n - 1] += (1.0 / 12.0 + hh * b / (24.0 * a)) * f_right;
    for (p, q) in got.iter().zip(expected.iter()) {
        assert_relative_eq!(p, q, epsilon = 1e-10);
    }
}
