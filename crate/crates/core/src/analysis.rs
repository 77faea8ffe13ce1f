//! Closed-form bounds, crossover thresholds and curve utilities.
//!
//! The four gains bounded here are, for a reflection pattern `Phi` and the
//! normalized Rayleigh channels `G^_t`, `G^_r`:
//!
//! ```text
//! gamma1 = ||G^_t^T Phi a||^2 ||G^_r Phi a||^2
//! gamma2 = ||G^_t^T Phi a||^2
//! gamma3 = ||G^_t^T Phi a||^2 ||G^_r Phi D1 a||^2 + ||G^_r Phi a||^2 ||G^_t^T Phi D1 a||^2
//! gamma4 = ||G^_t^T Phi a||^2 ||D2 b||^2 + ||b||^2 ||G^_t^T Phi D1 a||^2
//! ```
//!
//! with `D1 = diag(1-N, 3-N, ..., N-1)` and `D2` its `M_r`-element analogue.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::beamforming::{appendix_aligned_pattern, AlignKind, QuadraticObjective};
use crate::channel::{steering_irs, ChannelRealization};
use crate::error::{Error, Result};
use crate::metrics::{Architecture, ReflectPattern};
use crate::{CMatrix, CVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gamma {
    Gamma1,
    Gamma2,
    Gamma3,
    Gamma4,
}

impl Gamma {
    pub const ALL: [Gamma; 4] = [Gamma::Gamma1, Gamma::Gamma2, Gamma::Gamma3, Gamma::Gamma4];

    pub fn architecture(&self) -> Architecture {
        match self {
            Gamma::Gamma1 | Gamma::Gamma3 => Architecture::FullyPassive,
            Gamma::Gamma2 | Gamma::Gamma4 => Architecture::SemiPassive,
        }
    }

    /// Pattern whose expectation gives the lower bound.
    pub fn aligned_kind(&self) -> AlignKind {
        match self {
            Gamma::Gamma1 | Gamma::Gamma2 => AlignKind::AlignColumn,
            Gamma::Gamma3 => AlignKind::SplitAlign,
            Gamma::Gamma4 => AlignKind::DerivativeAlign,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
    pub quantity: Gamma,
}

fn check_counts(n: usize, m_t: usize, m_r: usize) -> Result<()> {
    if n == 0 || m_t == 0 || m_r == 0 {
        return Err(Error::validation("N, M_t and M_r must be at least 1"));
    }
    Ok(())
}

/// Closed-form lower and upper bounds on the expected optimized gain.
///
/// At `N = 1` some of the asymptotic expressions cross (lower above upper);
/// there the pattern is irrelevant and both ends are set to the exact
/// single-element expectation.
pub fn gamma_bounds(quantity: Gamma, n: usize, m_t: usize, m_r: usize) -> Result<BoundPair> {
    check_counts(n, m_t, m_r)?;
    let nf = n as f64;
    let (mt, mr) = (m_t as f64, m_r as f64);
    let kmin = mt.min(mr);
    let kmax = mt.max(mr);
    let sum_power = (mt + mr + (1.0 - 3.0 * kmin) / 2.0) * kmin * nf * nf + 2.0 * kmin * nf;
    let (lower, upper) = match quantity {
        Gamma::Gamma1 => {
            let h = PI * (nf - 1.0) / 4.0;
            (nf * nf * (h + kmin) * (h + kmax), nf * nf * sum_power)
        }
        Gamma::Gamma2 => (PI * nf * (nf - 1.0) / 4.0 + mt * nf, mt * nf * nf),
        Gamma::Gamma3 => {
            let upper = 2.0 * nf * nf * (nf * nf - 1.0) / 3.0 * sum_power;
            let lower = nf.powi(4) * (nf - 4.0) * (nf - 6.0) / 512.0
                + (nf - 1.0) * nf * (nf + 1.0) / 3.0
                    * (PI / 8.0 * (nf - 3.0) * (nf - 4.0) + PI * PI / 64.0 * (nf - 4.0) * (nf - 6.0) + 2.0 * nf - 1.0)
                + 2.0 * nf.powi(5) / 3.0
                + nf.powi(4) / 32.0 * (4.0 - 5.0 * PI);
            (lower, upper)
        }
        Gamma::Gamma4 => (
            PI * mr * nf.powi(4) / 16.0 + mr * (mt - 1.0) * nf * nf / 2.0,
            mt * mr * (mr * mr - 1.0) * nf * nf / 3.0 + mt * mr * nf * nf * (nf * nf - 1.0) / 3.0,
        ),
    };
    if n == 1 && lower > upper {
        let exact = match quantity {
            Gamma::Gamma1 => kmin + mt * mr,
            Gamma::Gamma2 => mt,
            Gamma::Gamma3 => 0.0,
            Gamma::Gamma4 => mt * mr * (mr * mr - 1.0) / 3.0,
        };
        return Ok(BoundPair { lower: exact, upper: exact, quantity });
    }
    Ok(BoundPair { lower, upper, quantity })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    LosSnr,
    RayleighSnr,
}

/// Element count above which the fully-passive surface wins.
///
/// `LosSnr` is exact for the LoS link; `RayleighSnr` is a sufficient
/// condition obtained from the lower bound of one gain against the upper
/// bound of the other.
pub fn crossover_threshold(kind: ThresholdKind, l_d: f64, m_t: usize, m_r: usize) -> Result<f64> {
    if !(l_d > 0.0 && l_d <= 1.0) {
        return Err(Error::validation(format!("path gain must lie in (0, 1], got {l_d}")));
    }
    check_counts(1, m_t, m_r)?;
    Ok(match kind {
        ThresholdKind::LosSnr => 1.0 / l_d.sqrt(),
        ThresholdKind::RayleighSnr => {
            let (mt, mr) = (m_t as f64, m_r as f64);
            let (kmin, kmax) = (mt.min(mr), mt.max(mr));
            let root = ((mt + mr).powi(2) + 4.0 * (mt * mr / l_d - kmin * kmax)).sqrt();
            2.0 / PI * root - 2.0 * (mt + mr) / PI + 1.0
        }
    })
}

/// Optimal LoS sensing SNR `P0 |alpha|^2 L^k M_t M_r N^(2k) / sigma2` with
/// `k = 2` (fully) or `k = 1` (semi).
pub fn los_optimal_snr(arch: Architecture, n: usize, l_d: f64, m_t: usize, m_r: usize, p0: f64, alpha_sq: f64, sigma2: f64) -> f64 {
    let k = match arch {
        Architecture::FullyPassive => 2,
        Architecture::SemiPassive => 1,
    };
    p0 * alpha_sq * l_d.powi(k) * (m_t * m_r) as f64 * (n as f64).powi(2 * k) / sigma2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_range: (usize, usize),
}

/// Least-squares line through `(log10 n, log10 value)`.
pub fn fit_scaling_exponent(points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::validation(format!("need at least 4 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::validation("n must be strictly increasing"));
    }
    if points.iter().any(|&(n, v)| n == 0 || !(v > 0.0) || !v.is_finite()) {
        return Err(Error::validation("values must be positive and finite, n >= 1"));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).log10()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v.log10()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(ScalingFit { slope, intercept, r_squared, n_range: (points[0].0, points[points.len() - 1].0) })
}

/// Drops points with `n < 4 max(M_t, M_r)`, outside the large-N regime.
pub fn asymptotic_points(points: &[(usize, f64)], m_t: usize, m_r: usize) -> Vec<(usize, f64)> {
    let floor = 4 * m_t.max(m_r);
    points.iter().copied().filter(|&(n, _)| n >= floor).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherIsBetter,
    LowerIsBetter,
}

/// Smallest grid `n` from which the fully-passive curve is strictly better
/// at every remaining grid point.
pub fn find_crossover(fully: &[(usize, f64)], semi: &[(usize, f64)], orientation: Orientation) -> Result<Option<usize>> {
    if fully.len() != semi.len() || fully.iter().zip(semi).any(|(a, b)| a.0 != b.0) {
        return Err(Error::validation("fully and semi sweeps must share the N grid"));
    }
    if fully.len() < 2 {
        return Err(Error::validation("crossover needs at least two grid points"));
    }
    let better = |f: f64, s: f64| match orientation {
        Orientation::HigherIsBetter => f > s,
        Orientation::LowerIsBetter => f < s,
    };
    let mut answer = None;
    for (f, s) in fully.iter().zip(semi).rev() {
        if better(f.1, s.1) {
            answer = Some(f.0);
        } else {
            break;
        }
    }
    Ok(answer)
}

/// `diag(1-N, 3-N, ..., N-1)` as a vector.
pub fn ramp(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * i as f64 + 1.0 - n as f64).collect()
}

fn scale_columns(g: &CMatrix, x: &CVector) -> CMatrix {
    let mut out = g.clone();
    for (j, mut c) in out.column_iter_mut().enumerate() {
        c *= x[j];
    }
    out
}

/// The maps `[G^_t^T diag(a), G^_r diag(a), G^_t^T diag(D1 a), G^_r diag(D1 a)]`.
fn gamma_maps(ch: &ChannelRealization) -> [CMatrix; 4] {
    let n = ch.n();
    let a = steering_irs(ch.theta, n, &ch.geom);
    let d = ramp(n);
    let da = CVector::from_fn(n, |i, _| a[i] * d[i]);
    let gt = ch.g_t_hat().transpose();
    let gr = ch.g_r_hat();
    [scale_columns(&gt, &a), scale_columns(&gr, &a), scale_columns(&gt, &da), scale_columns(&gr, &da)]
}

/// The gain as a unit-modulus quadratic program.
pub fn gamma_objective(quantity: Gamma, ch: &ChannelRealization) -> Result<QuadraticObjective> {
    let maps = gamma_maps(ch);
    let m_r = ch.g_r.nrows() as f64;
    match quantity {
        Gamma::Gamma1 => QuadraticObjective::from_maps(&maps, vec![], vec![(0, 1, 1.0)]),
        Gamma::Gamma2 => QuadraticObjective::from_maps(&maps, vec![(0, 1.0)], vec![]),
        Gamma::Gamma3 => QuadraticObjective::from_maps(&maps, vec![], vec![(0, 3, 1.0), (1, 2, 1.0)]),
        Gamma::Gamma4 => {
            QuadraticObjective::from_maps(&maps, vec![(0, m_r * (m_r * m_r - 1.0) / 3.0), (2, m_r)], vec![])
        }
    }
}

/// Gain of one realization under pattern `v`.
pub fn gamma_value(quantity: Gamma, v: &ReflectPattern, ch: &ChannelRealization) -> Result<f64> {
    if v.len() != ch.n() {
        return Err(Error::validation("pattern length does not match the channel"));
    }
    Ok(gamma_objective(quantity, ch)?.value(v))
}

/// Aligned value, optimized value and certified upper bound for one draw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub quantity: Gamma,
    pub aligned: f64,
    pub optimized: f64,
    pub bound: f64,
}

impl Sandwich {
    /// `aligned <= optimized <= bound` up to `rel` relative slack.
    pub fn holds(&self, rel: f64) -> bool {
        self.aligned <= self.optimized * (1.0 + rel) && self.optimized <= self.bound * (1.0 + rel)
    }
}

/// Optimizes the gain by coordinate ascent from the aligned construction
/// (column 0) and certifies it against the semidefinite relaxation.
pub fn sandwich(quantity: Gamma, ch: &ChannelRealization, rel_tol: f64, sdp_tol: f64) -> Result<Sandwich> {
    let obj = gamma_objective(quantity, ch)?;
    let v0 = appendix_aligned_pattern(quantity.aligned_kind(), &ch.g_t_hat(), 0, ch.theta, &ch.geom)?;
    let aligned = obj.value(&v0);
    let (v, optimized) = obj.coordinate_ascent(&v0, rel_tol, 200);
    let bound = obj.relaxation_bound(&v, sdp_tol)?;
    Ok(Sandwich { quantity, aligned, optimized, bound })
}

const MU1: f64 = 0.886_226_925_452_758; // sqrt(pi)/2
const MU2: f64 = 1.0;
const MU3: f64 = 1.329_340_388_179_137; // 3 sqrt(pi)/4
const MU4: f64 = 2.0;

/// `E[(sum_n |g_n|)^2] = N + pi N (N-1) / 4` for i.i.d. `CN(0,1)` entries.
pub fn align_column_mean(n: usize) -> f64 {
    let nf = n as f64;
    nf + PI * nf * (nf - 1.0) / 4.0
}

/// Exact mean of `gamma2` under the aligned pattern.
pub fn aligned_gamma2_mean(n: usize, m_t: usize) -> f64 {
    let nf = n as f64;
    PI * nf * (nf - 1.0) / 4.0 + m_t as f64 * nf
}

/// Exact `E[|g^T a~|^2 |g^T D1 a~|^2]` under the split construction, where
/// `g` is the aligned column.
///
/// On the first half the summands stay circular Gaussian; on the second they
/// become Rayleigh magnitudes. The Rayleigh fourth moment is assembled from
/// joint cumulants over all set partitions.
pub fn split_align_term_mean(n: usize) -> f64 {
    let d = ramp(n);
    let (first, second): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| (i as f64) < n as f64 / 2.0);
    // Gaussian sums A = sum g, C = sum d g over the first half.
    let var_a = first.len() as f64;
    let var_c: f64 = first.iter().map(|&i| d[i] * d[i]).sum();
    let cross: f64 = first.iter().map(|&i| d[i]).sum();
    // Rayleigh sums B = sum r, E = sum d r over the second half.
    let s = second.len() as f64;
    let d1: f64 = second.iter().map(|&i| d[i]).sum();
    let d2: f64 = second.iter().map(|&i| d[i] * d[i]).sum();
    let e_bb = s * MU2 + s * (s - 1.0) * MU1 * MU1;
    let e_ee = d2 * MU2 + (d1 * d1 - d2) * MU1 * MU1;
    let e_be = d1 * MU2 + (s - 1.0) * d1 * MU1 * MU1;
    let weights: Vec<Vec<f64>> = {
        let u: Vec<f64> = second.iter().map(|_| 1.0).collect();
        let w: Vec<f64> = second.iter().map(|&i| d[i]).collect();
        vec![u.clone(), u, w.clone(), w]
    };
    let e_bbee = fourth_moment(&weights);
    (var_a * var_c + cross * cross) + var_a * e_ee + 2.0 * cross * e_be + e_bb * var_c + e_bbee
}

/// `E[X1 X2 X3 X4]` for `Xk = sum_n w[k][n] r_n` with i.i.d. Rayleigh `r_n`.
fn fourth_moment(w: &[Vec<f64>]) -> f64 {
    let k1 = MU1;
    let k2 = MU2 - MU1 * MU1;
    let k3 = MU3 - 3.0 * MU2 * MU1 + 2.0 * MU1.powi(3);
    let k4 = MU4 - 4.0 * MU3 * MU1 - 3.0 * MU2 * MU2 + 12.0 * MU2 * MU1 * MU1 - 6.0 * MU1.powi(4);
    let kappa = [0.0, k1, k2, k3, k4];
    let joint = |block: &[usize]| -> f64 {
        let len = w[0].len();
        kappa[block.len()] * (0..len).map(|n| block.iter().map(|&k| w[k][n]).product::<f64>()).sum::<f64>()
    };
    set_partitions(4).iter().map(|p| p.iter().map(|b| joint(b)).product::<f64>()).sum()
}

fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for item in 0..n {
        let mut next = Vec::new();
        for part in &out {
            for b in 0..part.len() {
                let mut p: Vec<Vec<usize>> = part.clone();
                p[b].push(item);
                next.push(p);
            }
            let mut p: Vec<Vec<usize>> = part.clone();
            p.push(vec![item]);
            next.push(p);
        }
        out = next;
    }
    out
}

/// Exact `M_r E[||G^_t^T Phi D1 a||^2]` under the derivative-aligned pattern.
pub fn derivative_align_mean(n: usize, m_t: usize, m_r: usize) -> f64 {
    let d = ramp(n);
    let d2: f64 = d.iter().map(|x| x * x).sum();
    let abs_sum: f64 = d.iter().map(|x| x.abs()).sum();
    let aligned = d2 * MU2 + (abs_sum * abs_sum - d2) * MU1 * MU1;
    m_r as f64 * (aligned + (m_t as f64 - 1.0) * d2)
}

/// `|g_col^T a~|^2 |g_col^T D1 a~|^2` for one realization.
pub fn split_align_term(v: &ReflectPattern, ch: &ChannelRealization, col: usize) -> f64 {
    let n = ch.n();
    let a = steering_irs(ch.theta, n, &ch.geom);
    let d = ramp(n);
    let g = ch.g_t_hat();
    let (mut x, mut y) = (C64::default(), C64::default());
    for i in 0..n {
        let t = g[(i, col)] * v.v()[i] * a[i];
        x += t;
        y += t * d[i];
    }
    x.norm_sqr() * y.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_examples() {
        let b = gamma_bounds(Gamma::Gamma2, 1, 7, 3).unwrap();
        assert_eq!((b.lower, b.upper), (7.0, 7.0));
        let b = gamma_bounds(Gamma::Gamma1, 1, 1, 1).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-15 && (b.upper - 3.0).abs() < 1e-15);
        let b = gamma_bounds(Gamma::Gamma3, 100, 4, 4).unwrap();
        assert!(b.lower <= b.upper);
        let n6 = 100f64.powi(6);
        assert!(b.lower / n6 > 1.0 / 512.0 && b.lower / n6 < 1.0, "{}", b.lower);
        assert!(b.upper / n6 > 1.0 && b.upper / n6 < 100.0, "{}", b.upper);
        // Growth stays sixth-order: doubling N scales both ends by about 64.
        let b2 = gamma_bounds(Gamma::Gamma3, 200_000, 4, 4).unwrap();
        let b1 = gamma_bounds(Gamma::Gamma3, 100_000, 4, 4).unwrap();
        assert!((b2.lower / b1.lower / 64.0 - 1.0).abs() < 0.1);
        assert!((b2.upper / b1.upper / 64.0 - 1.0).abs() < 0.1);
        assert!(gamma_bounds(Gamma::Gamma1, 0, 4, 4).is_err());
    }

    #[test]
    fn thresholds() {
        let los = crossover_threshold(ThresholdKind::LosSnr, 4.665e-4, 4, 4).unwrap();
        assert!((los - 46.3).abs() < 0.05);
        assert_eq!(los.floor() as usize + 1, 47);
        assert_eq!(crossover_threshold(ThresholdKind::LosSnr, 1.0, 4, 4).unwrap(), 1.0);
        let ray = crossover_threshold(ThresholdKind::RayleighSnr, 4.665e-4, 4, 4).unwrap();
        assert!((ray - 231.7).abs() < 0.5, "{ray}");
        assert!(crossover_threshold(ThresholdKind::LosSnr, 0.0, 4, 4).is_err());
        assert!(crossover_threshold(ThresholdKind::LosSnr, 1.5, 4, 4).is_err());
    }

    #[test]
    fn scaling_fit_on_power_law() {
        let pts: Vec<(usize, f64)> = (1..=6).map(|k| (10 * k, 3.0 * (10.0 * k as f64).powi(4))).collect();
        let fit = fit_scaling_exponent(&pts).unwrap();
        assert!((fit.slope - 4.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_scaling_exponent(&pts[..3]).is_err());
        let mut bad = pts.clone();
        bad[2].1 = -1.0;
        assert!(fit_scaling_exponent(&bad).is_err());
        assert_eq!(asymptotic_points(&pts, 4, 4).first().unwrap().0, 20);
    }

    #[test]
    fn crossover_rules() {
        let grid = |v: &[f64]| v.iter().enumerate().map(|(i, &x)| (i + 1, x)).collect::<Vec<_>>();
        let f = grid(&[1.0, 3.0, 1.0, 5.0, 6.0]);
        let s = grid(&[2.0, 2.0, 2.0, 2.0, 2.0]);
        assert_eq!(find_crossover(&f, &s, Orientation::HigherIsBetter).unwrap(), Some(4));
        assert_eq!(find_crossover(&s, &f, Orientation::LowerIsBetter).unwrap(), Some(4));
        assert_eq!(find_crossover(&s, &f, Orientation::HigherIsBetter).unwrap(), None);
        assert!(find_crossover(&f[..1], &s[..1], Orientation::HigherIsBetter).is_err());
        assert!(find_crossover(&f, &s[..4], Orientation::HigherIsBetter).is_err());
    }

    #[test]
    fn partitions_of_four() {
        assert_eq!(set_partitions(4).len(), 15);
    }

    #[test]
    fn fourth_moment_single_variable() {
        // One element: E[r^4] = 2.
        let w = vec![vec![1.0]; 4];
        assert!((fourth_moment(&w) - 2.0).abs() < 1e-12);
        // Two elements, all weights one: E[(r1 + r2)^4] = 2*2 + 8 mu3 mu1 + 6.
        let w = vec![vec![1.0, 1.0]; 4];
        let expect = 2.0 * MU4 + 8.0 * MU3 * MU1 + 6.0 * MU2 * MU2;
        assert!((fourth_moment(&w) - expect).abs() < 1e-12);
    }
}
