//! Semidefinite relaxation of unit-modulus quadratic programs.
//!
//! Objectives are sums of `c * v^H Q v` and `c * (v^H Qa v)(v^H Qb v)` over
//! `|v_n| = 1`. Lifting `V = v v^H` and dropping the rank makes the feasible
//! set `{V >= 0, diag(V) = 1}`. Products are handled by successive convex
//! approximation: `ab = (a+b)^2/4 - (a-b)^2/4`, the convex square is
//! linearized at the current point and the concave one goes into an
//! epigraph block `[[tau, u], [u, 1]] >= 0`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use irs_sdp::{embed_hermitian, extract_hermitian, SdpProblem, SdpSettings, SdpSolution, SdpStatus, Sense, SymCoeffs, WarmStart};

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// Unit-modulus quadratic program; every `Q` is Hermitian PSD.
#[derive(Clone, Debug)]
pub(crate) struct QuadProgram {
    pub quads: Vec<CMatrix>,
    pub linear: Vec<(usize, f64)>,
    pub products: Vec<(usize, usize, f64)>,
}

impl QuadProgram {
    pub fn n(&self) -> usize {
        self.quads[0].nrows()
    }

    fn values_lifted(&self, v: &CMatrix) -> Vec<f64> {
        self.quads.iter().map(|q| (q * v).trace().re).collect()
    }

    fn values_vector(&self, v: &CVector) -> Vec<f64> {
        self.quads.iter().map(|q| v.dotc(&(q * v)).re).collect()
    }

    fn combine(&self, t: &[f64]) -> f64 {
        self.linear.iter().map(|&(k, c)| c * t[k]).sum::<f64>()
            + self.products.iter().map(|&(a, b, c)| c * t[a] * t[b]).sum::<f64>()
    }

    pub fn value_lifted(&self, v: &CMatrix) -> f64 {
        self.combine(&self.values_lifted(v))
    }

    pub fn value(&self, v: &CVector) -> f64 {
        self.combine(&self.values_vector(v))
    }
}

pub(crate) struct ScaOutcome {
    pub v_hat: CMatrix,
    /// Relaxed objective per accepted iterate, nondecreasing.
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn half_embed(m: &CMatrix) -> Result<DMatrix<f64>> {
    Ok(embed_hermitian(&hermitian_part(m))? * 0.5)
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

fn diag_constraints(p: &mut SdpProblem, n: usize) {
    for i in 0..n {
        let mut c = SymCoeffs::new();
        c.add(0, i, i, 1.0).add(0, i + n, i + n, 1.0);
        p.add_eq(c, 2.0);
    }
}

fn settings(tol: f64) -> SdpSettings {
    SdpSettings { tol, ..SdpSettings::default() }
}

fn lifted(sol: &SdpSolution) -> CMatrix {
    let v = extract_hermitian(&sol.x[0]);
    hermitian_part(&v)
}

/// Builds the convex surrogate at the point with quad values `t`.
fn surrogate(prog: &QuadProgram, t: &[f64], scale: f64) -> Result<SdpProblem> {
    let n = prog.n();
    let mut w = CMatrix::zeros(n, n);
    for &(k, c) in &prog.linear {
        w += &prog.quads[k] * C64::from(c / scale);
    }
    let mut epi: Vec<(f64, CMatrix)> = Vec::new();
    for &(a, b, c) in &prog.products {
        let wp = c * t[a] * t[b] / scale;
        let qa = &prog.quads[a] / C64::from(t[a]);
        let qb = &prog.quads[b] / C64::from(t[b]);
        w += (&qa + &qb) * C64::from(wp);
        if a != b {
            epi.push((wp, qa - qb));
        }
    }
    let mut blocks = vec![2 * n];
    blocks.extend(std::iter::repeat_n(2, epi.len()));
    let mut p = SdpProblem::with_blocks(&blocks, Sense::Maximize);
    p.cost[0] = half_embed(&w)?;
    diag_constraints(&mut p, n);
    for (k, (wp, d)) in epi.iter().enumerate() {
        let blk = k + 1;
        p.cost[blk][(0, 0)] = -wp / 4.0;
        let mut one = SymCoeffs::new();
        one.add(blk, 1, 1, 1.0);
        p.add_eq(one, 1.0);
        let mut link = SymCoeffs::from_dense(0, &half_embed(d)?)?;
        link.add(blk, 0, 1, -0.5);
        p.add_eq(link, 0.0);
    }
    Ok(p)
}

/// Successive convex approximation on the lifted program from `v0 v0^H`.
pub(crate) fn sca(prog: &QuadProgram, v0: &CVector, max_iter: usize, rel_tol: f64, sdp_tol: f64) -> Result<ScaOutcome> {
    let n = prog.n();
    let mut v_mat = v0 * v0.adjoint();
    let mut current = prog.value_lifted(&v_mat);
    let mut trace = vec![current];
    let mut warm: Option<WarmStart> = None;
    let mut converged = false;
    for _ in 0..max_iter {
        let mut t = prog.values_lifted(&v_mat);
        for (k, tk) in t.iter_mut().enumerate() {
            if !(*tk > 1e-300) {
                *tk = (prog.quads[k].trace().re / n as f64).max(1e-300);
            }
        }
        let scale = if current > 0.0 { current } else { prog.combine(&t).max(1e-300) };
        let p = surrogate(prog, &t, scale)?;
        let sol = settings(sdp_tol).solve(&p, warm.as_ref())?;
        if sol.status == SdpStatus::Infeasible {
            return Err(Error::Numerical("relaxed subproblem reported infeasible".into()));
        }
        warm = Some(sol.warm_start());
        let cand = lifted(&sol);
        let val = prog.value_lifted(&cand);
        if !(val > current) {
            converged = true;
            break;
        }
        let gain = val - current;
        v_mat = cand;
        current = val;
        trace.push(current);
        if gain <= rel_tol * current.abs() {
            converged = true;
            break;
        }
    }
    Ok(ScaOutcome { v_hat: v_mat, trace, converged })
}

/// Upper bound on `max tr(W V)` over `V >= 0, diag(V) = 1`.
///
/// Solves the relaxation, reads multipliers `y_n = Re (W V)_nn` from the
/// solution and returns the weak-duality value
/// `sum(y) + N max(0, lambda_max(W - diag y))`, valid for any `y`.
pub(crate) fn diag_certificate(w: &CMatrix, sdp_tol: f64) -> Result<f64> {
    let n = w.nrows();
    let w = hermitian_part(w);
    let scale = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let ws = &w / C64::from(scale);
    let mut p = SdpProblem::new(half_embed(&ws)?, Sense::Maximize);
    diag_constraints(&mut p, n);
    let sol = settings(sdp_tol).solve(&p, None)?;
    let v = lifted(&sol);
    let wv = &ws * &v;
    let y: Vec<f64> = (0..n).map(|i| wv[(i, i)].re).collect();
    Ok(scale * dual_value(&ws, &y))
}

fn dual_value(w: &CMatrix, y: &[f64]) -> f64 {
    let n = w.nrows();
    let mut m = w.clone();
    for (i, &yi) in y.iter().enumerate() {
        m[(i, i)] -= C64::from(yi);
    }
    let lmax = m.symmetric_eigenvalues().max();
    y.iter().sum::<f64>() + n as f64 * lmax.max(0.0)
}

fn lambda_max(q: &CMatrix) -> f64 {
    hermitian_part(q).symmetric_eigenvalues().max().max(0.0)
}

/// Certified upper bound on the lifted program, using `v_hat` as the
/// linearization point for products.
///
/// For a product, `log(ab)` is concave in `V`, so
/// `max ab <= a0 b0 exp(max tr(G V) - 2)` with `G = Qa/a0 + Qb/b0`.
/// Terms are bounded separately and summed; coefficients must be >= 0.
pub(crate) fn relaxation_bound(prog: &QuadProgram, v_hat: &CMatrix, sdp_tol: f64) -> Result<f64> {
    let n = prog.n();
    let t = prog.values_lifted(v_hat);
    let mut bound = 0.0;
    if !prog.linear.is_empty() {
        let mut w = CMatrix::zeros(n, n);
        for &(k, c) in &prog.linear {
            w += &prog.quads[k] * C64::from(c);
        }
        bound += diag_certificate(&w, sdp_tol)?;
    }
    for &(a, b, c) in &prog.products {
        let spectral = (n as f64).powi(2) * lambda_max(&prog.quads[a]) * lambda_max(&prog.quads[b]);
        let term = if t[a] > 0.0 && t[b] > 0.0 {
            let g = &prog.quads[a] / C64::from(t[a]) + &prog.quads[b] / C64::from(t[b]);
            let cert = diag_certificate(&g, sdp_tol)?;
            (t[a] * t[b] * (cert - 2.0).exp()).min(spectral)
        } else {
            spectral
        };
        bound += c * term;
    }
    Ok(bound)
}

/// `N lambda_max` style bound with no SDP: every `v^H Q v <= N lambda_max(Q)`.
pub(crate) fn spectral_bound(prog: &QuadProgram) -> f64 {
    let n = prog.n() as f64;
    let lm: Vec<f64> = prog.quads.iter().map(lambda_max).collect();
    prog.linear.iter().map(|&(k, c)| c * n * lm[k]).sum::<f64>()
        + prog.products.iter().map(|&(a, b, c)| c * n * n * lm[a] * lm[b]).sum::<f64>()
}

/// Gaussian randomization around `v_hat`: candidates `exp(j arg r)` with
/// `r ~ CN(0, v_hat)`. `seeds` are scored first; the first best is kept.
pub(crate) fn randomize<F: Fn(&CVector) -> f64>(
    v_hat: &CMatrix,
    seeds: &[CVector],
    samples: usize,
    seed: u64,
    score: F,
) -> (CVector, f64) {
    let n = v_hat.nrows();
    let mut best: Option<(CVector, f64)> = None;
    let offer = |cand: CVector, best: &mut Option<(CVector, f64)>| {
        let s = score(&cand);
        if best.as_ref().is_none_or(|b| s > b.1) {
            *best = Some((cand, s));
        }
    };
    for s in seeds {
        offer(s.clone(), &mut best);
    }
    let eig = hermitian_part(v_hat).symmetric_eigen();
    let sqrt_l: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let factor = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, j)] * sqrt_l[j]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let xi = CVector::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        });
        let r = &factor * xi;
        offer(unit_modulus(&r), &mut best);
    }
    best.expect("at least one candidate")
}

pub(crate) fn unit_modulus(r: &CVector) -> CVector {
    r.map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) })
}
