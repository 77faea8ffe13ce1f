//! Transmit and reflective beamforming designs.
//!
//! SNR maximization reduces to a unit-modulus quadratic program in the
//! reflection vector `v`: `(v^H R2 v)(v^H R1 v)` for the fully-passive
//! surface and `v^H R2 v` for the semi-passive one, where
//! `R1 = diag(a*) G_r^H G_r diag(a)` and `R2 = diag(a*) G_t^* G_t^T diag(a)`
//! use the normalized channels. Two backends solve it: semidefinite
//! relaxation with successive convex approximation and Gaussian
//! randomization, and cyclic coordinate ascent.
//!
//! CRB minimization alternates a covariance step (a small SDP, see
//! [`rstep`]) and a reflection step, accepting each step only when the
//! exact CRB improves.

mod coordinate;
mod rstep;
mod sdr;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_derivative, steering_irs, ArrayGeometry, ChannelRealization};
use crate::error::{Error, Result};
use crate::metrics::{
    crb, effective_vectors, mrt_covariance, Architecture, CrbTerms, ReflectPattern, SensingSpec, TransmitCovariance,
};
use crate::{CMatrix, CVector, C64};

use coordinate::FormSet;
use sdr::QuadProgram;

/// Reflection optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    SdrSca,
    CoordinateAscent,
    /// `SdrSca` up to [`AUTO_SDR_MAX_N`] elements, coordinate ascent above.
    Auto,
}

pub const AUTO_SDR_MAX_N: usize = 64;

impl Backend {
    pub fn resolve(self, n: usize) -> Backend {
        match self {
            Backend::Auto if n <= AUTO_SDR_MAX_N => Backend::SdrSca,
            Backend::Auto => Backend::CoordinateAscent,
            b => b,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Backend::SdrSca => "sdr_sca",
            Backend::CoordinateAscent => "coordinate_ascent",
            Backend::Auto => "auto",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sdr_sca" | "sdr" => Ok(Backend::SdrSca),
            "coordinate_ascent" | "ca" => Ok(Backend::CoordinateAscent),
            "auto" => Ok(Backend::Auto),
            other => Err(Error::validation(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    pub sca_max_iter: usize,
    pub sca_rel_tol: f64,
    pub randomization_samples: usize,
    pub backend: Backend,
    pub inner_sdp_tol: f64,
    pub alt_opt_max_rounds: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            sca_max_iter: 100,
            sca_rel_tol: 1e-6,
            randomization_samples: 500,
            backend: Backend::Auto,
            inner_sdp_tol: 1e-7,
            alt_opt_max_rounds: 20,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sca_max_iter == 0 || self.randomization_samples == 0 || self.alt_opt_max_rounds == 0 {
            return Err(Error::validation("optimizer counts must be at least 1"));
        }
        if !(self.sca_rel_tol > 0.0) || !(self.inner_sdp_tol > 0.0) {
            return Err(Error::validation("optimizer tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptStatus {
    Converged,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct BeamformingResult {
    pub v: ReflectPattern,
    pub r: Option<TransmitCovariance>,
    /// Final value of the optimized objective.
    pub objective: f64,
    /// SNR designs: nondecreasing objective per iteration. CRB designs:
    /// nonincreasing CRB per alternating round.
    pub objective_trace: Vec<f64>,
    pub relaxation_bound: Option<f64>,
    pub status: OptStatus,
    pub backend: Backend,
}

/// Phases that co-phase the BS-IRS LoS path with the target direction.
pub fn los_optimal_phases(theta: f64, theta2: f64, geom: &ArrayGeometry) -> ReflectPattern {
    let n = geom.n as f64;
    let k = PI * geom.spacing / geom.wavelength * (theta.sin() + theta2.sin());
    let phases: Vec<f64> = (1..=geom.n).map(|i| k * (n - 2.0 * i as f64 + 1.0)).collect();
    ReflectPattern::from_phases(&phases)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    RandomPhases,
    Identity,
}

pub fn benchmark_pattern(kind: BenchmarkKind, n: usize, seed: u64) -> ReflectPattern {
    match kind {
        BenchmarkKind::Identity => ReflectPattern::from_phases(&vec![0.0; n]),
        BenchmarkKind::RandomPhases => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phases: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
            ReflectPattern::from_phases(&phases)
        }
    }
}

/// Patterns that co-phase one channel column with the steering vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignKind {
    /// `-arg g_n - arg a_n` on every element.
    AlignColumn,
    /// `-arg a_n` on elements `n < N/2`, `-arg g_n - arg a_n` on the rest.
    SplitAlign,
    /// `-arg g_n - arg da_n` on every element.
    DerivativeAlign,
}

pub fn appendix_aligned_pattern(
    kind: AlignKind,
    g_hat: &CMatrix,
    col: usize,
    theta: f64,
    geom: &ArrayGeometry,
) -> Result<ReflectPattern> {
    let n = g_hat.nrows();
    if col >= g_hat.ncols() {
        return Err(Error::validation(format!("column {col} out of range for {} columns", g_hat.ncols())));
    }
    let a = steering_irs(theta, n, geom);
    let phases: Vec<f64> = match kind {
        AlignKind::AlignColumn => (0..n).map(|i| -g_hat[(i, col)].arg() - a[i].arg()).collect(),
        AlignKind::SplitAlign => (0..n)
            .map(|i| if (i as f64) < n as f64 / 2.0 { -a[i].arg() } else { -g_hat[(i, col)].arg() - a[i].arg() })
            .collect(),
        AlignKind::DerivativeAlign => {
            let ad = steering_derivative(theta, n, geom);
            (0..n).map(|i| -g_hat[(i, col)].arg() - ad[i].arg()).collect()
        }
    };
    Ok(ReflectPattern::from_phases(&phases))
}

/// `G diag(x)` for a row-oriented map `G`.
fn scale_columns(g: &CMatrix, x: &CVector) -> CMatrix {
    let mut out = g.clone();
    for (j, mut c) in out.column_iter_mut().enumerate() {
        c *= x[j];
    }
    out
}

fn gram(h: &CMatrix) -> CMatrix {
    let q = h.adjoint() * h;
    (&q + q.adjoint()) * C64::from(0.5)
}

/// Transmit and receive maps `v -> G_t^T diag(a) v`, `v -> G_r diag(a) v`
/// on the normalized channels.
fn snr_maps(ch: &ChannelRealization) -> (CMatrix, CMatrix) {
    let a = steering_irs(ch.theta, ch.n(), &ch.geom);
    (scale_columns(&ch.g_t_hat().transpose(), &a), scale_columns(&ch.g_r_hat(), &a))
}

/// Normalized SNR gain: `||G^_t^T Phi^T a||^2 ||G^_r Phi^T a||^2` (fully) or
/// `||G^_t^T Phi^T a||^2` (semi).
pub fn snr_gain(arch: Architecture, v: &ReflectPattern, ch: &ChannelRealization) -> Result<f64> {
    if v.len() != ch.n() {
        return Err(Error::validation("pattern length does not match the channel"));
    }
    let (ht, hr) = snr_maps(ch);
    let t = (&ht * v.v()).norm_squared();
    Ok(match arch {
        Architecture::FullyPassive => t * (&hr * v.v()).norm_squared(),
        Architecture::SemiPassive => t,
    })
}

fn snr_program(arch: Architecture, ch: &ChannelRealization) -> QuadProgram {
    let (ht, hr) = snr_maps(ch);
    match arch {
        Architecture::FullyPassive => {
            QuadProgram { quads: vec![gram(&ht), gram(&hr)], linear: vec![], products: vec![(0, 1, 1.0)] }
        }
        Architecture::SemiPassive => QuadProgram { quads: vec![gram(&ht)], linear: vec![(0, 1.0)], products: vec![] },
    }
}

fn initial_pattern(ch: &ChannelRealization) -> Result<ReflectPattern> {
    appendix_aligned_pattern(AlignKind::AlignColumn, &ch.g_t_hat(), 0, ch.theta, &ch.geom)
}

fn principal_pattern(v_hat: &CMatrix) -> CVector {
    let eig = v_hat.clone().symmetric_eigen();
    let k = eig.eigenvalues.imax();
    sdr::unit_modulus(&eig.eigenvectors.column(k).into_owned())
}

/// Maximizes [`snr_gain`] over the reflection pattern; the matching
/// transmit covariance is MRT.
pub fn maximize_snr(arch: Architecture, ch: &ChannelRealization, opts: &OptimizerOptions) -> Result<BeamformingResult> {
    opts.validate()?;
    let prog = snr_program(arch, ch);
    if prog.quads.iter().any(|q| q.iter().all(|z| z.norm() == 0.0)) {
        return Err(Error::validation("degenerate channel: an effective map is identically zero"));
    }
    let v0 = initial_pattern(ch)?;
    let backend = opts.backend.resolve(ch.n());
    match backend {
        Backend::CoordinateAscent => {
            let (ht, hr) = snr_maps(ch);
            let (maps, pairs) = match arch {
                Architecture::FullyPassive => (vec![ht, hr], vec![(0, 0), (1, 1)]),
                Architecture::SemiPassive => (vec![ht], vec![(0, 0)]),
            };
            let set = FormSet { maps, pairs };
            // Second start from the leading eigenvector of the trace-normalized
            // forms; ascent from the aligned pattern alone can stall.
            let n = ch.n();
            let mix = prog.quads.iter().fold(CMatrix::zeros(n, n), |acc, q| acc + q * C64::from(1.0 / q.trace().re));
            let (v, value, out) = [v0.v().clone(), principal_pattern(&mix)]
                .iter()
                .map(|start| {
                    let out = coordinate::maximize(&set, |f| f.iter().map(|z| z.re).product(), start, opts.sca_rel_tol, opts.sca_max_iter);
                    let v = ReflectPattern::from_arg(&out.v);
                    (prog.value(v.v()), v, out)
                })
                .fold(None, |best: Option<(ReflectPattern, f64, coordinate::AscentOutcome)>, (val, v, out)| match best {
                    Some(b) if b.1 >= val => Some(b),
                    _ => Some((v, val, out)),
                })
                .expect("two starts");
            Ok(BeamformingResult {
                objective: value,
                v,
                r: None,
                objective_trace: out.trace,
                relaxation_bound: Some(sdr::spectral_bound(&prog)),
                status: if out.converged { OptStatus::Converged } else { OptStatus::MaxIterations },
                backend,
            })
        }
        _ => {
            // The start already meets the spectral bound (LoS): nothing to improve.
            let spectral = sdr::spectral_bound(&prog);
            let start = prog.value(v0.v());
            if start >= spectral * (1.0 - 1e-12) {
                return Ok(BeamformingResult {
                    v: v0,
                    r: None,
                    objective: start,
                    objective_trace: vec![start],
                    relaxation_bound: Some(spectral),
                    status: OptStatus::Converged,
                    backend,
                });
            }
            let out = sdr::sca(&prog, v0.v(), opts.sca_max_iter, opts.sca_rel_tol, opts.inner_sdp_tol)?;
            let seeds = [v0.v().clone(), principal_pattern(&out.v_hat)];
            let (best, val) = sdr::randomize(&out.v_hat, &seeds, opts.randomization_samples, opts.seed, |c| prog.value(c));
            let bound = sdr::relaxation_bound(&prog, &out.v_hat, opts.inner_sdp_tol)?;
            Ok(BeamformingResult {
                v: ReflectPattern::from_arg(&best),
                r: None,
                objective: val,
                objective_trace: out.trace,
                relaxation_bound: Some(bound),
                status: if out.converged { OptStatus::Converged } else { OptStatus::MaxIterations },
                backend,
            })
        }
    }
}

/// Certified upper bound on [`snr_gain`] over all unit-modulus patterns,
/// using `v` as the linearization point of the relaxation bound.
pub fn snr_relaxation_bound(arch: Architecture, ch: &ChannelRealization, v: &ReflectPattern, sdp_tol: f64) -> Result<f64> {
    let prog = snr_program(arch, ch);
    sdr::relaxation_bound(&prog, &(v.v() * v.v().adjoint()), sdp_tol)
}

/// Generic unit-modulus program `sum c_k v^H Q_k v + sum c_p (v^H Qa v)(v^H Qb v)`
/// with nonnegative coefficients.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    maps: Vec<CMatrix>,
    inner: QuadProgram,
}

impl QuadraticObjective {
    /// `maps[k]` defines `Q_k = H_k^H H_k`.
    pub fn from_maps(maps: &[CMatrix], linear: Vec<(usize, f64)>, products: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = maps.first().map(|m| m.ncols()).ok_or_else(|| Error::validation("need at least one map"))?;
        if maps.iter().any(|m| m.ncols() != n) {
            return Err(Error::validation("maps must share the column count"));
        }
        let k = maps.len();
        if linear.iter().any(|&(i, c)| i >= k || !(c >= 0.0)) || products.iter().any(|&(a, b, c)| a >= k || b >= k || !(c >= 0.0)) {
            return Err(Error::validation("term indices out of range or negative coefficients"));
        }
        Ok(Self { maps: maps.to_vec(), inner: QuadProgram { quads: maps.iter().map(gram).collect(), linear, products } })
    }

    pub fn value(&self, v: &ReflectPattern) -> f64 {
        self.inner.value(v.v())
    }

    /// Coordinate ascent from `v0`; never returns a worse pattern.
    pub fn coordinate_ascent(&self, v0: &ReflectPattern, rel_tol: f64, max_sweeps: usize) -> (ReflectPattern, f64) {
        let pairs: Vec<(usize, usize)> = (0..self.maps.len()).map(|k| (k, k)).collect();
        let set = FormSet { maps: self.maps.clone(), pairs };
        let prog = &self.inner;
        let out = coordinate::maximize(
            &set,
            |f| {
                let t: Vec<f64> = f.iter().map(|z| z.re).collect();
                prog.linear.iter().map(|&(k, c)| c * t[k]).sum::<f64>()
                    + prog.products.iter().map(|&(a, b, c)| c * t[a] * t[b]).sum::<f64>()
            },
            v0.v(),
            rel_tol,
            max_sweeps,
        );
        let v = ReflectPattern::from_arg(&out.v);
        let val = self.value(&v);
        (v, val)
    }

    /// Certified bound over all unit-modulus patterns, linearized at `v`.
    pub fn relaxation_bound(&self, v: &ReflectPattern, sdp_tol: f64) -> Result<f64> {
        sdr::relaxation_bound(&self.inner, &(v.v() * v.v().adjoint()), sdp_tol)
    }
}

/// Maps whose forms give the CRB terms for a fixed transmit covariance.
struct CrbForms {
    set: FormSet,
    /// Receive-side constants for the semi-passive surface.
    fixed_q: Option<(f64, f64, C64)>,
}

fn crb_forms(arch: Architecture, ch: &ChannelRealization, r: &TransmitCovariance) -> CrbForms {
    let n = ch.n();
    let a = steering_irs(ch.theta, n, &ch.geom);
    let ad = steering_derivative(ch.theta, n, &ch.geom);
    let s = r.r().transpose();
    let gt = ch.g_t.transpose();
    let ha = scale_columns(&gt, &a);
    let hd = scale_columns(&gt, &ad);
    let sha = &s * &ha;
    let shd = &s * &hd;
    let mut maps = vec![ha, hd, sha, shd];
    let mut pairs = vec![(0, 2), (0, 3), (1, 3)];
    let fixed_q = match arch {
        Architecture::FullyPassive => {
            maps.push(scale_columns(&ch.g_r, &a));
            maps.push(scale_columns(&ch.g_r, &ad));
            pairs.extend([(4, 4), (5, 5), (5, 4)]);
            None
        }
        Architecture::SemiPassive => {
            let m_r = ch.g_r.nrows();
            let b = steering_irs(ch.theta, m_r, &ch.geom);
            let bd = steering_derivative(ch.theta, m_r, &ch.geom);
            Some((b.norm_squared(), bd.norm_squared(), bd.dotc(&b)))
        }
    };
    CrbForms { set: FormSet { maps, pairs }, fixed_q }
}

fn terms_from_forms(f: &[C64], fixed_q: Option<(f64, f64, C64)>) -> CrbTerms {
    let (q2, qd2, qdq) = fixed_q.unwrap_or_else(|| (f[3].re, f[4].re, f[5]));
    CrbTerms { f11: f[0].re, f12: f[1], f22: f[2].re, q2, qd2, qdq }
}

fn exact_den(arch: Architecture, ch: &ChannelRealization, r: &TransmitCovariance, v: &CVector) -> f64 {
    let forms = crb_forms(arch, ch, r);
    let f = forms.set.evaluate(v);
    terms_from_forms(&f, forms.fixed_q).exact()
}

/// Reflection step for fixed `R`: returns a pattern whose exact CRB
/// denominator is no smaller than that of `v`.
fn reflect_step(
    arch: Architecture,
    ch: &ChannelRealization,
    r: &TransmitCovariance,
    v: &ReflectPattern,
    opts: &OptimizerOptions,
    backend: Backend,
    salt: u64,
) -> Result<ReflectPattern> {
    let forms = crb_forms(arch, ch, r);
    match backend {
        Backend::CoordinateAscent | Backend::Auto => {
            let fixed = forms.fixed_q;
            let out = coordinate::maximize(
                &forms.set,
                |f| terms_from_forms(f, fixed).exact(),
                v.v(),
                opts.sca_rel_tol,
                opts.sca_max_iter,
            );
            Ok(ReflectPattern::from_arg(&out.v))
        }
        Backend::SdrSca => {
            // Approximate denominator F11 qd2 + q2 F22 as a quadratic program.
            let m = &forms.set.maps;
            let s_half = |h: &CMatrix, sh: &CMatrix| {
                let q = h.adjoint() * sh;
                (&q + q.adjoint()) * C64::from(0.5)
            };
            let qa = s_half(&m[0], &m[2]);
            let qd = s_half(&m[1], &m[3]);
            let prog = match forms.fixed_q {
                None => QuadProgram {
                    quads: vec![qa, qd, gram(&m[4]), gram(&m[5])],
                    linear: vec![],
                    products: vec![(0, 3, 1.0), (2, 1, 1.0)],
                },
                Some((q2, qd2, _)) => QuadProgram { quads: vec![qa, qd], linear: vec![(0, qd2), (1, q2)], products: vec![] },
            };
            let out = sdr::sca(&prog, v.v(), opts.sca_max_iter, opts.sca_rel_tol, opts.inner_sdp_tol)?;
            let seeds = [v.v().clone(), principal_pattern(&out.v_hat)];
            let seed = opts.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let (best, _) = sdr::randomize(&out.v_hat, &seeds, opts.randomization_samples, seed, |c| {
                let f = forms.set.evaluate(c);
                terms_from_forms(&f, forms.fixed_q).exact()
            });
            Ok(ReflectPattern::from_arg(&best))
        }
    }
}

fn bounded_crb(arch: Architecture, r: &TransmitCovariance, v: &ReflectPattern, ch: &ChannelRealization, spec: &SensingSpec) -> Result<f64> {
    crb(arch, r, v, ch, spec).map_err(|e| match e {
        Error::Unbounded(msg) => Error::Unbounded(format!(
            "{msg}; the CRB is unbounded at the initial design, increase N or use a channel with rank(G_t) >= 2"
        )),
        other => other,
    })
}

/// Alternating minimization of the exact CRB over `(R, Phi)`.
pub fn minimize_crb(
    arch: Architecture,
    ch: &ChannelRealization,
    spec: &SensingSpec,
    p0: f64,
    opts: &OptimizerOptions,
) -> Result<BeamformingResult> {
    opts.validate()?;
    spec.validate()?;
    let backend = opts.backend.resolve(ch.n());
    let mut v = initial_pattern(ch)?;
    let mut r = TransmitCovariance::isotropic(ch.g_t.ncols(), p0)?;
    let mut current = bounded_crb(arch, &r, &v, ch, spec)?;
    let mut trace = vec![current];
    let mut status = OptStatus::MaxIterations;
    for round in 0..opts.alt_opt_max_rounds {
        let start = current;
        let v_new = reflect_step(arch, ch, &r, &v, opts, backend, round as u64)?;
        if let Ok(c) = crb(arch, &r, &v_new, ch, spec) {
            if c < current {
                v = v_new;
                current = c;
            }
        }
        let e = effective_vectors(arch, &v, ch)?;
        let r_new = rstep::optimal_covariance(&e, p0, opts.inner_sdp_tol)?;
        if let Ok(c) = crb(arch, &r_new, &v, ch, spec) {
            if c < current {
                r = r_new;
                current = c;
            }
        }
        trace.push(current);
        if start - current <= opts.sca_rel_tol * current {
            status = OptStatus::Converged;
            break;
        }
    }
    Ok(BeamformingResult { v, r: Some(r), objective: current, objective_trace: trace, relaxation_bound: None, status, backend })
}

/// Reflection-only CRB design: isotropic `R`, one reflection optimization
/// from the aligned start.
pub fn reflective_only_crb(
    arch: Architecture,
    ch: &ChannelRealization,
    spec: &SensingSpec,
    p0: f64,
    opts: &OptimizerOptions,
) -> Result<BeamformingResult> {
    opts.validate()?;
    let backend = opts.backend.resolve(ch.n());
    let r = TransmitCovariance::isotropic(ch.g_t.ncols(), p0)?;
    let v0 = initial_pattern(ch)?;
    let start = bounded_crb(arch, &r, &v0, ch, spec)?;
    let v1 = reflect_step(arch, ch, &r, &v0, opts, backend, 0)?;
    let (v, c) = match crb(arch, &r, &v1, ch, spec) {
        Ok(c) if c < start => (v1, c),
        _ => (v0, start),
    };
    Ok(BeamformingResult {
        v,
        r: Some(r),
        objective: c,
        objective_trace: vec![start, c],
        relaxation_bound: None,
        status: OptStatus::Converged,
        backend,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignObjective {
    Snr,
    Crb,
}

/// Transmit covariance for a fixed reflection pattern.
pub fn transmit_only_design(
    arch: Architecture,
    ch: &ChannelRealization,
    v_fixed: &ReflectPattern,
    objective: DesignObjective,
    p0: f64,
    opts: &OptimizerOptions,
) -> Result<TransmitCovariance> {
    match objective {
        DesignObjective::Snr => mrt_covariance(v_fixed, ch, p0),
        DesignObjective::Crb => {
            let e = effective_vectors(arch, v_fixed, ch)?;
            rstep::optimal_covariance(&e, p0, opts.inner_sdp_tol)
        }
    }
}

/// Exact CRB denominator `kappa F11 + q2 (F22 - |F12|^2/F11)` evaluated
/// through the optimizer's form maps; used to cross-check [`crb`].
pub fn crb_denominator(arch: Architecture, ch: &ChannelRealization, r: &TransmitCovariance, v: &ReflectPattern) -> f64 {
    exact_den(arch, ch, r, v.v())
}
