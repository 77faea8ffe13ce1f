//! Transmit covariance that minimizes the exact DoA CRB for a fixed
//! reflection pattern.
//!
//! With `S = R^T` the CRB denominator is
//! `kappa F11 + q2 (F22 - |F12|^2 / F11)`, where only the projection of `S`
//! onto `span{p, pd}` matters. Writing `T = U^H S U` for an orthonormal
//! basis `U` of that span, the fraction becomes a 2x2 Hermitian block
//! `Z = [[z11, z12], [z12*, z22]] >= 0` with `z22 = F11`, `z12 = F12*`, and
//! `z11 >= |F12|^2 / F11` is driven to equality by the objective.

use nalgebra::DMatrix;

use irs_sdp::{embed_hermitian, extract_hermitian, project_psd, SdpProblem, SdpSettings, SdpStatus, Sense, SymCoeffs};

use crate::error::{Error, Result};
use crate::metrics::{CrbTerms, EffectiveVectors, TransmitCovariance};
use crate::{CMatrix, CVector, C64};

/// Smallest share of the budget kept along `p`.
///
/// The denominator is linear along the segment from `p` to its orthogonal
/// complement, and for some channels the supremum sits at zero power along
/// `p`, where `F11 = 0` and the CRB is undefined. Keeping this floor makes the
/// optimum attained at a cost of at most this fraction of the denominator.
pub(crate) const MIN_SHARE_ALONG_P: f64 = 1e-3;

/// Relative margin the rank-one fallback must beat the SDP answer by.
const TIE_TOLERANCE: f64 = 1e-5;

fn herm(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

/// `tr(H X) = 1/2 <embed(H), embed(X)>` for Hermitian `H`.
fn coeffs(block: usize, h: &CMatrix, scale: f64) -> Result<SymCoeffs> {
    let e: DMatrix<f64> = embed_hermitian(&herm(h))? * (0.5 * scale);
    Ok(SymCoeffs::from_dense(block, &e)?)
}

fn merge(mut a: SymCoeffs, b: &SymCoeffs) -> SymCoeffs {
    for &(blk, i, j, v) in b.entries() {
        a.add(blk, i, j, v);
    }
    a
}

/// Orthonormal basis of `span{p, pd}` by Gram-Schmidt, skipping directions
/// that are numerically absent.
fn basis(p: &CVector, pd: &CVector) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::new();
    let scale = p.norm().max(pd.norm());
    for x in [p, pd] {
        let mut r = x.clone();
        for u in &out {
            let c = u.dotc(&r);
            r -= u * c;
        }
        let nr = r.norm();
        if nr > 1e-10 * scale && nr > 0.0 {
            out.push(r / C64::from(nr));
        }
    }
    out
}

fn covariance_from_s(s: CMatrix, p0: f64) -> Result<TransmitCovariance> {
    let s = herm(&s);
    let emb = project_psd(&embed_hermitian(&s)?);
    let mut s = herm(&extract_hermitian(&emb));
    let tr = s.trace().re;
    if !(tr > 0.0) {
        return Err(Error::Numerical("transmit covariance collapsed to zero".into()));
    }
    s *= C64::from(p0 / tr);
    TransmitCovariance::new(s.transpose(), p0)
}

/// Optimal `R` for fixed effective vectors; `tol` is the SDP tolerance.
pub(crate) fn optimal_covariance(e: &EffectiveVectors, p0: f64, tol: f64) -> Result<TransmitCovariance> {
    let q2 = e.q.norm_squared();
    if !(q2 > 0.0) {
        return Err(Error::Unbounded("receive-side response vanishes".into()));
    }
    let kappa = (e.qd.norm_squared() - e.qd.dotc(&e.q).norm_sqr() / q2).max(0.0);
    let u = basis(&e.p_t, &e.pd_t);
    if u.is_empty() {
        return Err(Error::Unbounded("effective transmit channel vanishes".into()));
    }
    let umat = CMatrix::from_columns(&u);
    let alpha_p = umat.adjoint() * &e.p_t;
    let alpha_d = umat.adjoint() * &e.pd_t;
    let (s1, s2) = (alpha_p.norm(), alpha_d.norm());
    let d = u.len();
    if d == 1 || s2 == 0.0 || s1 == 0.0 {
        // Fraction term vanishes identically; only F11 (or F22) can be raised.
        let dir = if s1 > 0.0 { &alpha_p } else { &alpha_d };
        let w = &umat * (dir / C64::from(dir.norm()));
        return covariance_from_s(&w * w.adjoint() * C64::from(p0), p0);
    }
    let ph = &alpha_p / C64::from(s1);
    let dh = &alpha_d / C64::from(s2);
    let (mut a1, mut a2) = (kappa * s1 * s1, q2 * s2 * s2);
    let amax = a1.max(a2);
    a1 /= amax;
    a2 /= amax;

    // Block 0: embed(T) (2d x 2d). Block 1: embed(Z) (4 x 4). tr T <= 1.
    let mut p = SdpProblem::with_blocks(&[2 * d, 4], Sense::Maximize);
    let cost_t = &ph * ph.adjoint() * C64::from(a1) + &dh * dh.adjoint() * C64::from(a2);
    p.cost[0] = embed_hermitian(&herm(&cost_t))? * 0.5;
    let mut e11 = CMatrix::zeros(2, 2);
    e11[(0, 0)] = C64::from(1.0);
    p.cost[1] = embed_hermitian(&e11)? * (-0.5 * a2);

    p.add_ineq(coeffs(0, &CMatrix::identity(d, d), 1.0)?, 1.0);

    let mut e22 = CMatrix::zeros(2, 2);
    e22[(1, 1)] = C64::from(1.0);
    p.add_eq(merge(coeffs(1, &e22, 1.0)?, &coeffs(0, &(&ph * ph.adjoint()), -1.0)?), 0.0);
    p.add_ineq(coeffs(1, &e22, -1.0)?, -MIN_SHARE_ALONG_P);

    // z12 = dh^H T ph, real and imaginary parts.
    let mut e21 = CMatrix::zeros(2, 2);
    e21[(1, 0)] = C64::from(1.0);
    let m_t_link = &ph * dh.adjoint();
    let re = |m: &CMatrix| herm(m);
    let im = |m: &CMatrix| (m - m.adjoint()) * C64::new(0.0, -0.5);
    p.add_eq(merge(coeffs(1, &re(&e21), 1.0)?, &coeffs(0, &re(&m_t_link), -1.0)?), 0.0);
    p.add_eq(merge(coeffs(1, &im(&e21), 1.0)?, &coeffs(0, &im(&m_t_link), -1.0)?), 0.0);

    let sol = SdpSettings { tol, ..SdpSettings::default() }.solve(&p, None)?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::Numerical("transmit design SDP reported infeasible".into()));
    }
    let t = herm(&extract_hermitian(&sol.x[0]));
    let s = &umat * t * umat.adjoint() * C64::from(p0);
    let cand = covariance_from_s(s, p0)?;

    // The rank-one direction along p is always feasible. It replaces the SDP
    // answer only when better by more than the solver tolerance: under
    // reciprocity the optimal set can be a whole face, and a noise-driven
    // switch would make the returned point erratic.
    let w = &e.p_t / C64::from(e.p_t.norm());
    let mrt = covariance_from_s(&w * w.adjoint() * C64::from(p0), p0)?;
    let den = |c: &TransmitCovariance| CrbTerms::from_vectors(e, &c.r().transpose()).exact();
    let (dc, dm) = (den(&cand), den(&mrt));
    Ok(if dm > dc * (1.0 + TIE_TOLERANCE) || !(dc.is_finite()) { mrt } else { cand })
}
