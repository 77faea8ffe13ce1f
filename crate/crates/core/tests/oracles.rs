//! Independent numerical oracles for closed forms used by the library.

use std::f64::consts::PI;

use irs_sense::analysis::{
    align_column_mean, aligned_gamma2_mean, derivative_align_mean, gamma_value, ramp, split_align_term,
    split_align_term_mean, Gamma,
};
use irs_sense::beamforming::{
    appendix_aligned_pattern, benchmark_pattern, snr_gain, transmit_only_design, AlignKind, BenchmarkKind,
    DesignObjective, OptimizerOptions,
};
use irs_sense::channel::{gen_channel, steering_irs, ArrayGeometry, ChannelKind, ChannelRealization, PathLossModel, ScenarioGeometry};
use irs_sense::metrics::{
    crb, crb_from_fisher, crb_terms, effective_vectors, fisher_numeric, marcum_q1, snr, Architecture, ReflectPattern,
    SensingSpec, TransmitCovariance,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn draw(kind: ChannelKind, n: usize, seed: u64) -> ChannelRealization {
    let geom = ArrayGeometry::new(4, 4, n).unwrap();
    gen_channel(kind, &geom, &ScenarioGeometry::reference_layout(), &PathLossModel::default(), 1.0, seed).unwrap()
}

fn cn(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * (0.5f64).sqrt()
}

fn random_pattern(n: usize, rng: &mut ChaCha8Rng) -> ReflectPattern {
    let phases: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    ReflectPattern::from_phases(&phases)
}

fn random_covariance(m: usize, p0: f64, rng: &mut ChaCha8Rng) -> TransmitCovariance {
    let w = DMatrix::from_fn(m, m, |_, _| cn(rng));
    let r = &w * w.adjoint();
    let r = r.clone() * C64::from(p0 / r.trace().re);
    TransmitCovariance::new((&r + r.adjoint()) * C64::from(0.5), p0).unwrap()
}

struct Stats {
    sum: f64,
    sum_sq: f64,
    k: usize,
}

impl Stats {
    fn new() -> Self {
        Self { sum: 0.0, sum_sq: 0.0, k: 0 }
    }

    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.k += 1;
    }

    fn mean(&self) -> f64 {
        self.sum / self.k as f64
    }

    fn std_err(&self) -> f64 {
        let k = self.k as f64;
        ((self.sum_sq / k - self.mean().powi(2)) * k / (k - 1.0)).sqrt() / k.sqrt()
    }

    fn assert_matches(&self, want: f64, z_max: f64, what: &str) {
        let z = (self.mean() - want) / self.std_err();
        assert!(z.abs() <= z_max, "{what}: MC {} ± {} vs {want} (z = {z:.2})", self.mean(), self.std_err());
    }
}

/// `1 - P(|a + w| <= b)` integrated over the disk in polar coordinates.
fn marcum_by_quadrature(a: f64, b: f64) -> f64 {
    let (nr, nphi) = (400, 400);
    let simpson = |k: usize, last: usize| if k == 0 || k == last { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
    let (hr, hphi) = (b / nr as f64, 2.0 * PI / nphi as f64);
    let mut inside = 0.0;
    for i in 0..=nr {
        let r = i as f64 * hr;
        let mut ring = 0.0;
        for j in 0..=nphi {
            let phi = j as f64 * hphi;
            ring += simpson(j, nphi) * (-(r * r - 2.0 * a * r * phi.cos() + a * a) / 2.0).exp();
        }
        inside += simpson(i, nr) * r * ring * hphi / 3.0;
    }
    1.0 - inside * hr / 3.0 / (2.0 * PI)
}

#[test]
fn marcum_matches_quadrature() {
    for a in [0.0, 0.5, 1.0, 2.0, 3.5, 5.0] {
        for b in [0.3, 1.0, 2.0, 3.0, 4.5] {
            let (q, oracle) = (marcum_q1(a, b), marcum_by_quadrature(a, b));
            assert!((q - oracle).abs() < 1e-8, "Q1({a}, {b}) = {q}, quadrature {oracle}");
        }
    }
}

#[test]
fn snr_matches_received_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = SensingSpec::default();
    for arch in Architecture::BOTH {
        let ch = draw(ChannelKind::Rayleigh, 10, 17);
        let v = random_pattern(10, &mut rng);
        let r = random_covariance(4, 1.0, &mut rng);
        let e = effective_vectors(arch, &v, &ch).unwrap();
        let m = (&e.q * e.p_t.transpose()) * ch.alpha;
        let root = {
            let eig = r.r().clone().symmetric_eigen();
            let s = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from(l.max(0.0).sqrt())));
            &eig.eigenvectors * s * eig.eigenvectors.adjoint()
        };
        let mut stats = Stats::new();
        for _ in 0..40_000 {
            let x = &root * DVector::from_fn(4, |_, _| cn(&mut rng));
            stats.push((&m * x).norm_squared() / spec.sigma2);
        }
        stats.assert_matches(snr(arch, &r, &v, &ch, &spec).unwrap(), 4.0, arch.label());
    }
}

#[test]
fn random_phase_gain_averages_to_m_t_n() {
    let n = 16;
    let mut stats = Stats::new();
    for k in 0..4000 {
        let ch = draw(ChannelKind::Rayleigh, n, 1000 + k);
        let v = benchmark_pattern(BenchmarkKind::RandomPhases, n, k);
        stats.push(snr_gain(Architecture::SemiPassive, &v, &ch).unwrap());
    }
    stats.assert_matches((4 * n) as f64, 4.0, "random phases");
}

#[test]
fn exact_aligned_expectations_match_monte_carlo() {
    for n in [9, 12] {
        let (mut col, mut g2, mut split, mut deriv) = (Stats::new(), Stats::new(), Stats::new(), Stats::new());
        for k in 0..20_000 {
            let ch = draw(ChannelKind::Rayleigh, n, 50_000 + k);
            let g = ch.g_t_hat();
            let a = steering_irs(ch.theta, n, &ch.geom);
            let v = appendix_aligned_pattern(AlignKind::AlignColumn, &g, 0, ch.theta, &ch.geom).unwrap();
            let c1: C64 = (0..n).map(|i| g[(i, 0)] * a[i] * v.v()[i]).sum();
            col.push(c1.norm_sqr());
            g2.push(gamma_value(Gamma::Gamma2, &v, &ch).unwrap());
            let vs = appendix_aligned_pattern(AlignKind::SplitAlign, &g, 0, ch.theta, &ch.geom).unwrap();
            split.push(split_align_term(&vs, &ch, 0));
            let vd = appendix_aligned_pattern(AlignKind::DerivativeAlign, &g, 0, ch.theta, &ch.geom).unwrap();
            let d = ramp(n);
            let x = DVector::from_fn(n, |i, _| a[i] * d[i] * vd.v()[i]);
            deriv.push(4.0 * (g.transpose() * x).norm_squared());
        }
        col.assert_matches(align_column_mean(n), 4.0, "aligned column");
        g2.assert_matches(aligned_gamma2_mean(n, 4), 4.0, "aligned gamma2");
        split.assert_matches(split_align_term_mean(n), 4.0, "split term");
        deriv.assert_matches(derivative_align_mean(n, 4, 4), 4.0, "derivative term");
    }
}

/// Best exact denominator over `R = P0 B Z B^H`, `B` an orthonormal basis of
/// `span{conj p, conj dp}`, `Z` a trace-one 2x2 PSD matrix with at least
/// `floor` weight on the `conj p` direction.
fn grid_best_den(arch: Architecture, ch: &ChannelRealization, v: &ReflectPattern, p0: f64, floor: f64) -> f64 {
    let e = effective_vectors(arch, v, ch).unwrap();
    let u1 = e.p_t.conjugate().normalize();
    let w = e.pd_t.conjugate();
    let u2 = (&w - &u1 * u1.dotc(&w)).normalize();
    let mut best: f64 = 0.0;
    for it in 0..=60 {
        let t = floor + (1.0 - floor) * it as f64 / 60.0;
        for ir in 0..=8 {
            let rho = ir as f64 / 8.0;
            for ip in 0..32 {
                let c = C64::from_polar(rho * (t * (1.0 - t)).sqrt(), 2.0 * PI * ip as f64 / 32.0);
                let r = (&u1 * u1.adjoint()) * C64::from(t)
                    + (&u2 * u2.adjoint()) * C64::from(1.0 - t)
                    + (&u1 * u2.adjoint()) * c
                    + (&u2 * u1.adjoint()) * c.conj();
                let r = r * C64::from(p0);
                let cov = TransmitCovariance::new((&r + r.adjoint()) * C64::from(0.5), p0 * (1.0 + 1e-12)).unwrap();
                best = best.max(crb_terms(arch, &cov, v, ch).unwrap().exact());
            }
        }
    }
    best
}

#[test]
fn covariance_step_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let opts = OptimizerOptions::default();
    for k in 0..8 {
        let arch = if k % 2 == 0 { Architecture::FullyPassive } else { Architecture::SemiPassive };
        let kind = if k < 4 { ChannelKind::Rayleigh } else { ChannelKind::Rician { k_factor: 1.0 } };
        let n = 8 + 2 * k as usize;
        let ch = draw(kind, n, 900 + k);
        let v = random_pattern(n, &mut rng);
        let design = transmit_only_design(arch, &ch, &v, DesignObjective::Crb, 1.0, &opts).unwrap();
        let got = crb_terms(arch, &design, &v, &ch).unwrap().exact();
        let grid = grid_best_den(arch, &ch, &v, 1.0, 1e-3);
        let iso = crb_terms(arch, &TransmitCovariance::isotropic(4, 1.0).unwrap(), &v, &ch).unwrap().exact();
        assert!(got >= grid * (1.0 - 1e-3), "{arch:?} k={k}: design {got:e} vs grid {grid:e}");
        assert!(got >= iso * (1.0 - 1e-9), "{arch:?} k={k}: design {got:e} below isotropic {iso:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn crb_matches_numeric_fisher(seed in any::<u64>(), n in 2usize..=16, fully in any::<bool>(), rician in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = if rician { ChannelKind::Rician { k_factor: 2.0 } } else { ChannelKind::Rayleigh };
        let ch = draw(kind, n, seed);
        let arch = if fully { Architecture::FullyPassive } else { Architecture::SemiPassive };
        let v = random_pattern(n, &mut rng);
        let r = random_covariance(4, 1.0, &mut rng);
        let spec = SensingSpec::default();
        if let Ok(closed) = crb(arch, &r, &v, &ch, &spec) {
            let numeric = crb_from_fisher(&fisher_numeric(arch, &r, &v, &ch, &spec, 1e-5).unwrap());
            prop_assert!((closed / numeric - 1.0).abs() < 1e-4, "{closed} vs {numeric}");
        }
    }
}
