use irs_sdp::{
    embed_hermitian, extract_hermitian, project_psd, solve_sdp, SdpProblem, SdpSettings, SdpStatus, Sense, SymCoeffs,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_diag_constraints(p: &mut SdpProblem, n: usize, complex: bool) {
    for i in 0..n {
        let mut a = SymCoeffs::new();
        a.add(0, i, i, 1.0);
        if complex {
            a.add(0, i + n, i + n, 1.0);
            p.add_eq(a, 2.0);
        } else {
            p.add_eq(a, 1.0);
        }
    }
}

fn inner_sym(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn assert_kkt(p: &SdpProblem, sol: &irs_sdp::SdpSolution, tol: f64) {
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!(sol.primal_residual <= tol, "primal {}", sol.primal_residual);
    assert!(sol.dual_residual <= tol, "dual {}", sol.dual_residual);
    assert!(sol.min_eigenvalue >= -tol, "min eig {}", sol.min_eigenvalue);
    for con in &p.eq_constraints {
        assert!((con.coeffs.inner(&sol.x) - con.rhs).abs() <= tol);
    }
    for con in &p.ineq_constraints {
        assert!(con.coeffs.inner(&sol.x) <= con.rhs + tol);
    }
}

#[test]
fn trace_with_fixed_corner() {
    let mut p = SdpProblem::new(DMatrix::identity(2, 2), Sense::Minimize);
    let mut a = SymCoeffs::new();
    a.add(0, 0, 0, 1.0);
    p.add_eq(a, 1.0);
    let sol = solve_sdp(&p, 1e-7, 20_000).unwrap();
    assert_kkt(&p, &sol, 1e-6);
    assert!((sol.objective - 1.0).abs() <= 1e-6);
    let want = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    assert!((&sol.x[0] - want).norm() < 1e-6);
}

#[test]
fn real_rank_one_cost_matches_sign_enumeration() {
    let g = DVector::from_vec(vec![0.7, -1.3, 0.4]);
    let mut p = SdpProblem::new(&g * g.transpose(), Sense::Maximize);
    unit_diag_constraints(&mut p, 3, false);
    let sol = solve_sdp(&p, 1e-7, 20_000).unwrap();
    assert_kkt(&p, &sol, 1e-6);
    let mut best: f64 = 0.0;
    for mask in 0..8u32 {
        let s: f64 = (0..3).map(|i| if mask >> i & 1 == 1 { g[i] } else { -g[i] }).sum();
        best = best.max(s * s);
    }
    assert!((sol.objective - best).abs() <= 1e-6 * (1.0 + best));
}

#[test]
fn unit_modulus_rank_one_cost_reaches_n_squared() {
    // Cost u u^H with |u_i| = 1: the relaxation is tight at N^2.
    let n = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = DVector::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.random::<f64>() * 6.283));
    let r = &u * u.adjoint();
    let mut p = SdpProblem::new(embed_hermitian(&r).unwrap(), Sense::Maximize);
    unit_diag_constraints(&mut p, n, true);
    let sol = solve_sdp(&p, 1e-7, 20_000).unwrap();
    assert_kkt(&p, &sol, 1e-6);
    let want = (n * n) as f64;
    assert!((sol.objective / 2.0 - want).abs() <= 1e-6 * (1.0 + want));
    let v = extract_hermitian(&sol.x[0]);
    assert!((v[(0, 0)].re - 1.0).abs() < 1e-6);
}

#[test]
fn trace_inequality_with_second_block() {
    // max <c, X1> + x2 s.t. tr X1 <= 2, x2 <= 0.5 (as a 1x1 block), X1 2x2.
    let mut p = SdpProblem::with_blocks(&[2, 1], Sense::Maximize);
    p.cost[0] = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.0]);
    p.cost[1][(0, 0)] = 1.0;
    let mut tr = SymCoeffs::new();
    tr.add(0, 0, 0, 1.0).add(0, 1, 1, 1.0);
    p.add_ineq(tr, 2.0);
    let mut x2 = SymCoeffs::new();
    x2.add(1, 0, 0, 1.0);
    p.add_ineq(x2, 0.5);
    let sol = solve_sdp(&p, 1e-8, 20_000).unwrap();
    assert_kkt(&p, &sol, 1e-6);
    let lmax = p.cost[0].symmetric_eigenvalues().max();
    let want = 2.0 * lmax + 0.5;
    assert!((sol.objective - want).abs() <= 1e-6 * (1.0 + want));
    // The dual certifies the value from above.
    assert!(sol.dual.iter().all(|&y| y >= -1e-8));
    assert!((sol.dual[0] * 2.0 + sol.dual[1] * 0.5 - want).abs() < 1e-5);
}

#[test]
fn contradictory_equalities_are_infeasible() {
    let mut p = SdpProblem::new(DMatrix::identity(2, 2), Sense::Minimize);
    let mut a = SymCoeffs::new();
    a.add(0, 0, 0, 1.0);
    p.add_eq(a.clone(), 1.0);
    p.add_eq(a, 2.0);
    let sol = solve_sdp(&p, 1e-7, 20_000).unwrap();
    assert_ne!(sol.status, SdpStatus::Optimal);
}

#[test]
fn negative_trace_bound_is_infeasible() {
    let mut p = SdpProblem::new(DMatrix::identity(3, 3), Sense::Maximize);
    let mut a = SymCoeffs::new();
    a.add(0, 0, 0, 1.0).add(0, 1, 1, 1.0).add(0, 2, 2, 1.0);
    p.add_ineq(a, -1.0);
    let sol = solve_sdp(&p, 1e-7, 20_000).unwrap();
    assert_eq!(sol.status, SdpStatus::Infeasible);
}

#[test]
fn warm_start_cuts_iterations() {
    let n = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = DMatrix::from_fn(n, 3, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let r = &g * g.adjoint();
    let mut p = SdpProblem::new(embed_hermitian(&r).unwrap(), Sense::Maximize);
    unit_diag_constraints(&mut p, n, true);
    let settings = SdpSettings::default();
    let cold = settings.solve(&p, None).unwrap();
    let warm = settings.solve(&p, Some(&cold.warm_start())).unwrap();
    assert_eq!(warm.status, SdpStatus::Optimal);
    assert!(warm.iterations < cold.iterations / 4, "{} vs {}", warm.iterations, cold.iterations);
    assert!((warm.objective - cold.objective).abs() < 1e-5 * cold.objective);
}

#[test]
fn rejects_asymmetric_coefficients() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
    assert!(SymCoeffs::from_dense(0, &a).is_err());
    let p = SdpProblem::new(a, Sense::Minimize);
    assert!(solve_sdp(&p, 1e-7, 100).is_err());
}

#[test]
fn project_psd_examples() {
    let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
    let want = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
    assert!((project_psd(&s) - want).norm() < 1e-14);
    let g = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, -0.3, 2.0, 0.5, 0.1]);
    let psd = &g * g.transpose();
    assert!((project_psd(&psd) - &psd).amax() < 1e-12);
}

#[test]
fn project_psd_beats_random_psd_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let s = &a + a.transpose();
    let proj = project_psd(&s);
    let best = (&s - &proj).norm();
    for _ in 0..10_000 {
        let g = DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let cand = &g * g.transpose() * rng.random::<f64>();
        assert!((&s - cand).norm() >= best - 1e-12);
    }
}

fn hermitian_strategy(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |raw| {
        let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(raw[i * n + j], raw[n * n + i * n + j]));
        (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn embedding_duplicates_spectrum(h in (1usize..6).prop_flat_map(hermitian_strategy)) {
        let n = h.nrows();
        let e = embed_hermitian(&h).unwrap();
        let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().flat_map(|&l| [l, l]).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(ev.len(), 2 * n);
        for (a, b) in ev.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn embedding_preserves_inner_product(a in hermitian_strategy(3), b in hermitian_strategy(3)) {
        let lhs = inner_sym(&embed_hermitian(&a).unwrap(), &embed_hermitian(&b).unwrap());
        let rhs: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum();
        prop_assert!((lhs - 2.0 * rhs).abs() < 1e-10);
    }

    #[test]
    fn projection_is_idempotent(raw in prop::collection::vec(-3.0f64..3.0, 25)) {
        let m = DMatrix::from_row_slice(5, 5, &raw);
        let s = &m + m.transpose();
        let once = project_psd(&s);
        let twice = project_psd(&once);
        prop_assert!((&once - &twice).amax() < 1e-12);
        prop_assert!(once.symmetric_eigenvalues().min() > -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimal_status_implies_feasibility(seed in any::<u64>(), n in 2usize..6) {
        // max <C, X> s.t. diag(X) = 1 and tr(B X) <= n/2 with B PSD.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let mut p = SdpProblem::new(&c + c.transpose(), Sense::Maximize);
        unit_diag_constraints(&mut p, n, false);
        let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        p.add_ineq_dense(&(&g * g.transpose()), 0.5 * (&g * g.transpose()).trace() + 0.1).unwrap();
        let sol = solve_sdp(&p, 1e-7, 20_000).unwrap();
        if sol.status == SdpStatus::Optimal {
            prop_assert!(sol.min_eigenvalue >= -1e-7);
            prop_assert!(sol.primal_residual <= 1e-7);
        }
    }
}
