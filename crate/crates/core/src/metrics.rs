//! Sensing SNR, DoA CRB, detection probability and a Fisher-information oracle.
//!
//! Both architectures share one structure. The transmit side is seen through
//! `p_t = G_t^T Phi a(theta)` and its derivative `pd_t`. The receive side is
//! `q = G_r Phi a(theta)` for the fully-passive surface and `q = b(theta)` at
//! the sensors of the semi-passive one. With `S = R^T`:
//!
//! ```text
//! SNR = |alpha|^2 ||q||^2 (p_t^H S p_t) / sigma2
//! CRB = sigma2 / (2 T |alpha|^2 den)
//! den = F11 (||qd||^2 - |qd^H q|^2 / ||q||^2) + ||q||^2 (F22 - |F12|^2 / F11)
//! ```
//!
//! where `F = [p_t, pd_t]^H S [p_t, pd_t]`. The approximate CRB drops both
//! subtracted fractions.

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::channel::{steering_derivative, steering_irs, ChannelRealization};
use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// Absolute floor below which a CRB denominator counts as zero.
pub const UNBOUNDED_FLOOR: f64 = 1e-18;
/// Relative floor against the approximate denominator: below this the exact
/// denominator is cancellation noise.
pub const UNBOUNDED_RELATIVE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    FullyPassive,
    SemiPassive,
}

impl Architecture {
    pub const BOTH: [Architecture; 2] = [Architecture::FullyPassive, Architecture::SemiPassive];

    pub fn label(&self) -> &'static str {
        match self {
            Architecture::FullyPassive => "fully",
            Architecture::SemiPassive => "semi",
        }
    }
}

/// Unit-modulus reflection coefficients (the diagonal of `Phi`).
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectPattern {
    v: CVector,
}

impl ReflectPattern {
    pub fn new(v: CVector) -> Result<Self> {
        if let Some((i, z)) = v.iter().enumerate().find(|(_, z)| (z.norm() - 1.0).abs() > 1e-10) {
            return Err(Error::validation(format!("reflection coefficient {i} has modulus {}", z.norm())));
        }
        Ok(Self { v })
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self { v: CVector::from_iterator(phases.len(), phases.iter().map(|&p| C64::from_polar(1.0, p))) }
    }

    /// Projects arbitrary entries onto the unit circle; zeros map to 1.
    pub fn from_arg(x: &CVector) -> Self {
        Self {
            v: x.map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) }),
        }
    }

    pub fn v(&self) -> &CVector {
        &self.v
    }

    pub fn phases(&self) -> Vec<f64> {
        self.v.iter().map(|z| z.arg()).collect()
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// Hermitian PSD transmit covariance with a trace budget.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmitCovariance {
    r: CMatrix,
    power_budget: f64,
}

impl TransmitCovariance {
    pub fn new(r: CMatrix, power_budget: f64) -> Result<Self> {
        if !(power_budget > 0.0) || !power_budget.is_finite() {
            return Err(Error::validation("power budget must be positive"));
        }
        if !r.is_square() {
            return Err(Error::validation("covariance must be square"));
        }
        if (&r - r.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) > 1e-9 * power_budget {
            return Err(Error::validation("covariance must be Hermitian"));
        }
        let lmin = r.clone().symmetric_eigenvalues().min();
        if lmin < -1e-9 * power_budget {
            return Err(Error::validation(format!("covariance is not PSD (eigenvalue {lmin:e})")));
        }
        let tr = r.trace().re;
        if tr > power_budget * (1.0 + 1e-9) {
            return Err(Error::validation(format!("trace {tr} exceeds budget {power_budget}")));
        }
        Ok(Self { r, power_budget })
    }

    /// `P0 / M_t * I`.
    pub fn isotropic(m_t: usize, p0: f64) -> Result<Self> {
        Self::new(CMatrix::identity(m_t, m_t) * C64::from(p0 / m_t as f64), p0)
    }

    pub fn zero(m_t: usize, p0: f64) -> Result<Self> {
        Self::new(CMatrix::zeros(m_t, m_t), p0)
    }

    pub fn r(&self) -> &CMatrix {
        &self.r
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }
}

/// Noise power, snapshot count and false-alarm target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingSpec {
    pub sigma2: f64,
    pub t_symbols: usize,
    pub p_fa: f64,
}

impl Default for SensingSpec {
    /// -90 dBm noise, 256 snapshots, 1% false alarms.
    fn default() -> Self {
        Self { sigma2: 1e-12, t_symbols: 256, p_fa: 1e-2 }
    }
}

impl SensingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() || self.t_symbols == 0 || !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(Error::validation("need sigma2 > 0, T >= 1 and 0 < p_fa < 1"));
        }
        Ok(())
    }
}

/// Transmit-side and receive-side vectors at the channel's `theta`.
#[derive(Clone, Debug)]
pub struct EffectiveVectors {
    pub p_t: CVector,
    pub pd_t: CVector,
    pub q: CVector,
    pub qd: CVector,
}

/// Vectors for an arbitrary angle; the metric functions use `ch.theta`.
pub fn effective_vectors_at(arch: Architecture, v: &ReflectPattern, ch: &ChannelRealization, theta: f64) -> Result<EffectiveVectors> {
    let n = ch.n();
    if v.len() != n {
        return Err(Error::validation(format!("pattern has {} entries, channel has N = {n}", v.len())));
    }
    let a = steering_irs(theta, n, &ch.geom);
    let ad = steering_derivative(theta, n, &ch.geom);
    let va = a.component_mul(v.v());
    let vad = ad.component_mul(v.v());
    let p_t = ch.g_t.tr_mul(&va);
    let pd_t = ch.g_t.tr_mul(&vad);
    let (q, qd) = match arch {
        Architecture::FullyPassive => (&ch.g_r * &va, &ch.g_r * &vad),
        Architecture::SemiPassive => {
            let m_r = ch.g_r.nrows();
            (steering_irs(theta, m_r, &ch.geom), steering_derivative(theta, m_r, &ch.geom))
        }
    };
    Ok(EffectiveVectors { p_t, pd_t, q, qd })
}

pub fn effective_vectors(arch: Architecture, v: &ReflectPattern, ch: &ChannelRealization) -> Result<EffectiveVectors> {
    effective_vectors_at(arch, v, ch, ch.theta)
}

/// `x^H S y`.
pub(crate) fn form(s: &CMatrix, x: &CVector, y: &CVector) -> C64 {
    x.dotc(&(s * y))
}

fn check_r(r: &TransmitCovariance, ch: &ChannelRealization) -> Result<()> {
    if r.r().nrows() != ch.g_t.ncols() {
        return Err(Error::validation(format!("covariance is {0}x{0}, channel has M_t = {1}", r.r().nrows(), ch.g_t.ncols())));
    }
    Ok(())
}

/// Sensing SNR per snapshot.
pub fn snr(arch: Architecture, r: &TransmitCovariance, v: &ReflectPattern, ch: &ChannelRealization, spec: &SensingSpec) -> Result<f64> {
    check_r(r, ch)?;
    let e = effective_vectors(arch, v, ch)?;
    let s = r.r().transpose();
    let pattern = form(&s, &e.p_t, &e.p_t).re.max(0.0);
    Ok(ch.alpha.norm_sqr() * e.q.norm_squared() * pattern / spec.sigma2)
}

/// Maximum-ratio transmission `P0 w w^H / ||w||^2` with `w = conj(p_t)`.
pub fn mrt_covariance(v: &ReflectPattern, ch: &ChannelRealization, p0: f64) -> Result<TransmitCovariance> {
    let e = effective_vectors(Architecture::SemiPassive, v, ch)?;
    let nrm = e.p_t.norm_squared();
    if !(nrm > 0.0) {
        return Err(Error::Numerical("effective transmit channel is zero; MRT undefined".into()));
    }
    let w = e.p_t.conjugate();
    let r = (&w * w.adjoint()) * C64::from(p0 / nrm);
    TransmitCovariance::new((&r + r.adjoint()) * C64::from(0.5), p0)
}

/// Fisher denominators for one `(R, Phi)` pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrbTerms {
    pub f11: f64,
    pub f12: C64,
    pub f22: f64,
    pub q2: f64,
    pub qd2: f64,
    pub qdq: C64,
}

impl CrbTerms {
    pub fn from_vectors(e: &EffectiveVectors, s: &CMatrix) -> Self {
        Self {
            f11: form(s, &e.p_t, &e.p_t).re,
            f12: form(s, &e.p_t, &e.pd_t),
            f22: form(s, &e.pd_t, &e.pd_t).re,
            q2: e.q.norm_squared(),
            qd2: e.qd.norm_squared(),
            qdq: e.qd.dotc(&e.q),
        }
    }

    /// Exact denominator; zero when either fraction is undefined.
    pub fn exact(&self) -> f64 {
        if !(self.f11 > 0.0) || !(self.q2 > 0.0) {
            return 0.0;
        }
        let kappa = self.qd2 - self.qdq.norm_sqr() / self.q2;
        let schur = self.f22 - self.f12.norm_sqr() / self.f11;
        self.f11 * kappa + self.q2 * schur
    }

    pub fn approx(&self) -> f64 {
        self.f11 * self.qd2 + self.q2 * self.f22
    }
}

pub fn crb_terms(arch: Architecture, r: &TransmitCovariance, v: &ReflectPattern, ch: &ChannelRealization) -> Result<CrbTerms> {
    check_r(r, ch)?;
    let e = effective_vectors(arch, v, ch)?;
    Ok(CrbTerms::from_vectors(&e, &r.r().transpose()))
}

fn crb_from_den(den: f64, approx: f64, ch: &ChannelRealization, spec: &SensingSpec) -> Result<f64> {
    if !(den > UNBOUNDED_FLOOR) || den <= UNBOUNDED_RELATIVE * approx {
        return Err(Error::Unbounded(format!(
            "Fisher denominator {den:e} vanishes; DoA needs rank(G_t) >= 2 or a rank-2 receive side (raise N or the channel rank)"
        )));
    }
    Ok(spec.sigma2 / (2.0 * spec.t_symbols as f64 * ch.alpha.norm_sqr() * den))
}

/// DoA CRB including both subtracted fractions.
pub fn crb(arch: Architecture, r: &TransmitCovariance, v: &ReflectPattern, ch: &ChannelRealization, spec: &SensingSpec) -> Result<f64> {
    let t = crb_terms(arch, r, v, ch)?;
    crb_from_den(t.exact(), t.approx(), ch, spec)
}

/// CRB with the subtracted fractions dropped; never above [`crb`].
pub fn crb_approx(arch: Architecture, r: &TransmitCovariance, v: &ReflectPattern, ch: &ChannelRealization, spec: &SensingSpec) -> Result<f64> {
    let t = crb_terms(arch, r, v, ch)?;
    let a = t.approx();
    crb_from_den(a, 0.0, ch, spec)
}

/// Marcum Q-function of order one, `P(|a + w| > b)` for `w ~ N(0, I_2)`.
///
/// Poisson mixture over the noncentrality,
/// `sum_k Pois(k; a^2/2) * P(Pois(b^2/2) <= k)`, summed in log space and
/// stopped once the remaining Poisson mass falls below 1e-14. For `b < a`
/// the small complement is summed instead, so values near one stay monotone.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    assert!(a >= 0.0 && b >= 0.0, "marcum_q1 needs nonnegative arguments");
    if b == 0.0 {
        return 1.0;
    }
    if b < a {
        return 1.0 - marcum_complement(a, b);
    }
    let lam = 0.5 * a * a;
    let x = 0.5 * b * b;
    if lam == 0.0 {
        return (-x).exp();
    }
    let (ln_lam, ln_x) = (lam.ln(), x.ln());
    let mut ln_fact = 0.0; // ln k!
    let mut cdf = 0.0; // P(Pois(x) <= k)
    let mut mass = 0.0;
    let mut total = 0.0;
    let mut k = 0usize;
    loop {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        cdf += (-x + k as f64 * ln_x - ln_fact).exp();
        let w = (-lam + k as f64 * ln_lam - ln_fact).exp();
        total += w * cdf.min(1.0);
        mass += w;
        if k as f64 > lam && (1.0 - mass < 1e-14 || w < 1e-300) {
            break;
        }
        if cdf >= 1.0 - 1e-16 && k as f64 > lam {
            // Every remaining term has cdf = 1.
            total += (1.0 - mass).max(0.0);
            break;
        }
        k += 1;
    }
    total.clamp(0.0, 1.0)
}

/// `P(|a + w| <= b)` as `sum_j Pois(j; a^2/2) * P(Pois(b^2/2) > j)`, with each
/// survival term accumulated from the far tail.
fn marcum_complement(a: f64, b: f64) -> f64 {
    // P(|a + w| <= b) <= P(|w| >= a - b) = exp(-(a - b)^2 / 2)
    if 0.5 * (a - b).powi(2) > 745.0 {
        return 0.0;
    }
    let lam = 0.5 * a * a;
    let x = 0.5 * b * b;
    let (ln_lam, ln_x) = (lam.ln(), x.ln());
    let spread = |m: f64| 40.0 * m.sqrt() + 50.0;
    let lo = (lam - spread(lam)).max(0.0) as usize;
    let hi = (lam + spread(lam)).ceil() as usize;
    let top = hi.max((x + spread(x)).ceil() as usize) + 1;
    let mut ln_fact: f64 = (1..=lo).map(|k| (k as f64).ln()).sum();
    let ln_fact_lo = ln_fact;
    // pmf[m - lo] = Pois(m; x) for m in lo..=top
    let mut pmf = Vec::with_capacity(top - lo + 1);
    for m in lo..=top {
        if m > lo {
            ln_fact += (m as f64).ln();
        }
        pmf.push((-x + m as f64 * ln_x - ln_fact).exp());
    }
    // sf[j - lo] = P(Pois(x) > j)
    let mut sf = vec![0.0; top - lo + 1];
    for i in (0..top - lo).rev() {
        sf[i] = sf[i + 1] + pmf[i + 1];
    }
    let mut ln_fact = ln_fact_lo;
    let mut total = 0.0;
    for j in lo..=hi {
        if j > lo {
            ln_fact += (j as f64).ln();
        }
        total += (-lam + j as f64 * ln_lam - ln_fact).exp() * sf[j - lo];
    }
    total.clamp(0.0, 1.0)
}

/// High-SNR GLRT detection probability `Q1(sqrt(2 T SNR), sqrt(2 ln(1/p_fa)))`.
pub fn detection_probability(
    arch: Architecture,
    r: &TransmitCovariance,
    v: &ReflectPattern,
    ch: &ChannelRealization,
    spec: &SensingSpec,
) -> Result<f64> {
    spec.validate()?;
    let s = snr(arch, r, v, ch, spec)?;
    Ok(detection_from_snr(s, spec))
}

pub fn detection_from_snr(snr: f64, spec: &SensingSpec) -> f64 {
    let a = (2.0 * spec.t_symbols as f64 * snr).sqrt();
    let b = (2.0 * (1.0 / spec.p_fa).ln()).sqrt();
    marcum_q1(a, b)
}

/// Noise-free response matrix `M(theta)` with `mean = alpha M x`.
fn response(arch: Architecture, v: &ReflectPattern, ch: &ChannelRealization, theta: f64) -> Result<CMatrix> {
    let e = effective_vectors_at(arch, v, ch, theta)?;
    Ok(&e.q * e.p_t.transpose())
}

/// Fisher information for `(theta, Re alpha, Im alpha)` from central
/// differences of the noise-free mean.
pub fn fisher_numeric(
    arch: Architecture,
    r: &TransmitCovariance,
    v: &ReflectPattern,
    ch: &ChannelRealization,
    spec: &SensingSpec,
    fd_step: f64,
) -> Result<Matrix3<f64>> {
    if !(fd_step > 0.0) {
        return Err(Error::validation("finite-difference step must be positive"));
    }
    check_r(r, ch)?;
    let m0 = response(arch, v, ch, ch.theta)?;
    let mp = response(arch, v, ch, ch.theta + fd_step)?;
    let mm = response(arch, v, ch, ch.theta - fd_step)?;
    let d_theta = (mp - mm) * (ch.alpha / (2.0 * fd_step));
    let derivs: [CMatrix; 3] = [d_theta, m0.clone(), &m0 * C64::i()];
    let rr = r.r();
    let scale = 2.0 * spec.t_symbols as f64 / spec.sigma2;
    let mut f = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let val: C64 = (&derivs[j] * rr * derivs[i].adjoint()).trace();
            f[(i, j)] = scale * val.re;
            f[(j, i)] = f[(i, j)];
        }
    }
    Ok(f)
}

/// `1 / (F_tt - F_ta F_aa^-1 F_at)` for a 3x3 Fisher matrix.
pub fn crb_from_fisher(f: &Matrix3<f64>) -> f64 {
    let faa = DMatrix::from_fn(2, 2, |i, j| f[(i + 1, j + 1)]);
    let fta = DMatrix::from_fn(1, 2, |_, j| f[(0, j + 1)]);
    let inv = faa.try_inverse().unwrap_or_else(|| DMatrix::from_element(2, 2, f64::NAN));
    let schur = f[(0, 0)] - (&fta * inv * fta.transpose())[(0, 0)];
    1.0 / schur
}
