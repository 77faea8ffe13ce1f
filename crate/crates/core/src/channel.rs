//! Geometry, steering vectors, path loss and BS-IRS channel realizations.
//!
//! Arrays are uniform linear arrays referenced at their centre. Angles are
//! measured from broadside, and the broadside of every array faces its peer
//! terminal: the BS array faces the IRS and the IRS faces the BS. The BS-IRS
//! angles are therefore zero, and the target DoA `theta` is the signed angle
//! at the IRS between the directions to the BS and to the target.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// Element counts and spacing for the BS arrays and the IRS.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub m_t: usize,
    pub m_r: usize,
    pub n: usize,
    /// Inter-element spacing in meters.
    pub spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl ArrayGeometry {
    /// Half-wavelength spacing. Only the ratio `spacing / wavelength` enters
    /// any result, so the wavelength is a nominal 0.1 m.
    pub fn new(m_t: usize, m_r: usize, n: usize) -> Result<Self> {
        let wavelength = 0.1;
        let g = Self { m_t, m_r, n, spacing: wavelength / 2.0, wavelength };
        g.validate()?;
        Ok(g)
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_t == 0 || self.m_r == 0 || self.n == 0 {
            return Err(Error::validation("array sizes must be at least 1"));
        }
        if !(self.spacing > 0.0 && self.wavelength > 0.0) || !self.spacing.is_finite() || !self.wavelength.is_finite() {
            return Err(Error::validation("spacing and wavelength must be positive"));
        }
        Ok(())
    }

    fn phase_scale(&self) -> f64 {
        PI * self.spacing / self.wavelength
    }
}

/// Planar placement of BS, IRS and target together with the derived angles
/// and distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    pub bs_pos: [f64; 2],
    pub irs_pos: [f64; 2],
    pub target_pos: [f64; 2],
    /// Target DoA at the IRS.
    pub theta: f64,
    /// IRS angle seen from the BS.
    pub theta1: f64,
    /// BS angle seen from the IRS.
    pub theta2: f64,
    pub d_bi: f64,
    pub d_it: f64,
}

impl ScenarioGeometry {
    /// BS at (0,0), IRS at (1,1), target at (1,-5), all in meters.
    pub fn reference_layout() -> Self {
        geometry_from_positions([0.0, 0.0], [1.0, 1.0], [1.0, -5.0]).expect("fixed layout is valid")
    }
}

pub fn geometry_from_positions(bs: [f64; 2], irs: [f64; 2], target: [f64; 2]) -> Result<ScenarioGeometry> {
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    if [bs, irs, target].iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::validation("positions must be finite"));
    }
    let (d_bi, d_it, d_bt) = (dist(bs, irs), dist(irs, target), dist(bs, target));
    if d_bi == 0.0 || d_it == 0.0 || d_bt == 0.0 {
        return Err(Error::validation("BS, IRS and target positions must be pairwise distinct"));
    }
    let to_bs = (bs[1] - irs[1]).atan2(bs[0] - irs[0]);
    let to_target = (target[1] - irs[1]).atan2(target[0] - irs[0]);
    let mut theta = to_target - to_bs;
    while theta > PI {
        theta -= 2.0 * PI;
    }
    while theta <= -PI {
        theta += 2.0 * PI;
    }
    if theta.abs() >= PI / 2.0 {
        return Err(Error::validation(format!(
            "target lies behind the IRS aperture (angle {theta:.3} rad from broadside)"
        )));
    }
    Ok(ScenarioGeometry { bs_pos: bs, irs_pos: irs, target_pos: target, theta, theta1: 0.0, theta2: 0.0, d_bi, d_it })
}

/// Log-distance path loss `K0 (d/d0)^(-exponent)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub k0_db: f64,
    pub d0: f64,
    pub exponent_bs_irs: f64,
    pub exponent_irs_target: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self { k0_db: -30.0, d0: 1.0, exponent_bs_irs: 2.2, exponent_irs_target: 2.0 }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) || !(self.exponent_bs_irs > 0.0) || !(self.exponent_irs_target > 0.0) || !self.k0_db.is_finite()
        {
            return Err(Error::validation("path-loss model needs d0 > 0, positive exponents and finite K0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    BsIrs,
    IrsTarget,
}

/// Linear power gain of `link` at distance `d`.
pub fn path_loss(d: f64, model: &PathLossModel, link: Link) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::validation(format!("distance must be positive, got {d}")));
    }
    let exponent = match link {
        Link::BsIrs => model.exponent_bs_irs,
        Link::IrsTarget => model.exponent_irs_target,
    };
    Ok(10f64.powf(model.k0_db / 10.0) * (d / model.d0).powf(-exponent))
}

/// Centre-referenced ULA response; `n` may be the IRS size, `M_r` or `M_t`.
pub fn steering_irs(theta: f64, n: usize, geom: &ArrayGeometry) -> CVector {
    let k = geom.phase_scale() * theta.sin();
    CVector::from_fn(n, |i, _| C64::from_polar(1.0, k * (2.0 * i as f64 + 1.0 - n as f64)))
}

/// Derivative of [`steering_irs`] with respect to `theta`.
pub fn steering_derivative(theta: f64, n: usize, geom: &ArrayGeometry) -> CVector {
    let a = steering_irs(theta, n, geom);
    let pre = C64::new(0.0, geom.phase_scale() * theta.cos());
    CVector::from_fn(n, |i, _| pre * (2.0 * i as f64 + 1.0 - n as f64) * a[i])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    #[serde(rename = "los")]
    LoS,
    Rician {
        k_factor: f64,
    },
    Rayleigh,
}

impl ChannelKind {
    pub fn label(&self) -> String {
        match self {
            ChannelKind::LoS => "los".into(),
            ChannelKind::Rician { k_factor } => format!("rician{k_factor}"),
            ChannelKind::Rayleigh => "rayleigh".into(),
        }
    }
}

/// One draw of the BS-IRS channel pair and the target coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// `N x M_t`, BS to IRS.
    pub g_t: CMatrix,
    /// `M_r x N`, IRS to BS.
    pub g_r: CMatrix,
    pub alpha: C64,
    pub kind: ChannelKind,
    pub seed_used: u64,
    /// Target DoA at the IRS.
    pub theta: f64,
    /// One-way BS-IRS power gain `L(d_bi)`.
    pub path_gain: f64,
    pub geom: ArrayGeometry,
}

impl ChannelRealization {
    /// `G_t / sqrt(L)`.
    pub fn g_t_hat(&self) -> CMatrix {
        self.g_t.unscale(self.path_gain.sqrt())
    }

    /// `G_r / sqrt(L)`.
    pub fn g_r_hat(&self) -> CMatrix {
        self.g_r.unscale(self.path_gain.sqrt())
    }

    pub fn n(&self) -> usize {
        self.g_t.nrows()
    }
}

fn cscg(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn cscg_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    // Column-major fill keeps the draw order independent of nalgebra internals.
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = cscg(rng);
        }
    }
    m
}

/// Unit-variance scattered parts `(G_t, G_r)` sharing the common block:
/// `G_t = [G, G_t']`, `G_r = [G^T; G_r']`, so `G_r = G_t^T` when `M_t = M_r`.
fn rayleigh_pair(geom: &ArrayGeometry, rng: &mut ChaCha8Rng) -> (CMatrix, CMatrix) {
    let (n, m_t, m_r) = (geom.n, geom.m_t, geom.m_r);
    let k = m_t.min(m_r);
    let common = cscg_matrix(n, k, rng);
    let own_t = cscg_matrix(n, m_t - k, rng);
    let own_r = cscg_matrix(m_r - k, n, rng);
    let mut g_t = CMatrix::zeros(n, m_t);
    g_t.columns_mut(0, k).copy_from(&common);
    g_t.columns_mut(k, m_t - k).copy_from(&own_t);
    let mut g_r = CMatrix::zeros(m_r, n);
    g_r.rows_mut(0, k).copy_from(&common.transpose());
    g_r.rows_mut(k, m_r - k).copy_from(&own_r);
    (g_t, g_r)
}

/// Rank-one geometric parts `(a(theta2) c(theta1)^T, b(theta1) a(theta2)^T)`.
fn los_pair(geom: &ArrayGeometry, scen: &ScenarioGeometry) -> (CMatrix, CMatrix) {
    let a2 = steering_irs(scen.theta2, geom.n, geom);
    let c1 = steering_irs(scen.theta1, geom.m_t, geom);
    let b1 = steering_irs(scen.theta1, geom.m_r, geom);
    (&a2 * c1.transpose(), &b1 * a2.transpose())
}

pub fn gen_channel(
    kind: ChannelKind,
    geom: &ArrayGeometry,
    scen: &ScenarioGeometry,
    model: &PathLossModel,
    rcs: f64,
    seed: u64,
) -> Result<ChannelRealization> {
    geom.validate()?;
    model.validate()?;
    let l = path_loss(scen.d_bi, model, Link::BsIrs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (g_t, g_r) = match kind {
        ChannelKind::LoS => los_pair(geom, scen),
        ChannelKind::Rayleigh => rayleigh_pair(geom, &mut rng),
        ChannelKind::Rician { k_factor } => {
            if !(k_factor >= 0.0) || !k_factor.is_finite() {
                return Err(Error::validation("Rician factor must be finite and nonnegative"));
            }
            let (los_t, los_r) = los_pair(geom, scen);
            let (nlos_t, nlos_r) = rayleigh_pair(geom, &mut rng);
            let w_los = (k_factor / (1.0 + k_factor)).sqrt();
            let w_nlos = (1.0 / (1.0 + k_factor)).sqrt();
            (los_t * C64::from(w_los) + nlos_t * C64::from(w_nlos), los_r * C64::from(w_los) + nlos_r * C64::from(w_nlos))
        }
    };
    let sl = C64::from(l.sqrt());
    Ok(ChannelRealization {
        g_t: g_t * sl,
        g_r: g_r * sl,
        alpha: target_coefficient(scen, model, rcs, seed)?,
        kind,
        seed_used: seed,
        theta: scen.theta,
        path_gain: l,
        geom: *geom,
    })
}

/// Target response with `|alpha|^2 = rcs * L(d_it)^2` and a seeded uniform phase.
pub fn target_coefficient(scen: &ScenarioGeometry, model: &PathLossModel, rcs: f64, seed: u64) -> Result<C64> {
    if !(rcs > 0.0) || !rcs.is_finite() {
        return Err(Error::validation("rcs must be positive"));
    }
    let l = path_loss(scen.d_it, model, Link::IrsTarget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let phase = 2.0 * PI * (1.0 - rng.random::<f64>());
    Ok(C64::from_polar(rcs.sqrt() * l, phase))
}
