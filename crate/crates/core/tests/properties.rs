use std::f64::consts::PI;

use irs_sense::analysis::{crossover_threshold, gamma_bounds, los_optimal_snr, ramp, Gamma, ThresholdKind};
use irs_sense::beamforming::{
    appendix_aligned_pattern, maximize_snr, minimize_crb, snr_gain, AlignKind, Backend, OptimizerOptions,
};
use irs_sense::channel::{
    gen_channel, steering_derivative, steering_irs, ArrayGeometry, ChannelKind, ChannelRealization, PathLossModel,
    ScenarioGeometry,
};
use irs_sense::experiments::{run_sweep, to_csv, write_outputs, Objective, ScenarioConfig, Scheme};
use irs_sense::metrics::{
    crb, crb_approx, detection_probability, marcum_q1, snr, Architecture, ReflectPattern, SensingSpec,
    TransmitCovariance,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn kind_from(code: u8) -> ChannelKind {
    match code % 3 {
        0 => ChannelKind::Rayleigh,
        1 => ChannelKind::Rician { k_factor: 1.0 },
        _ => ChannelKind::Rician { k_factor: 5.0 },
    }
}

fn draw(kind: ChannelKind, m_t: usize, m_r: usize, n: usize, seed: u64) -> ChannelRealization {
    let geom = ArrayGeometry::new(m_t, m_r, n).unwrap();
    gen_channel(kind, &geom, &ScenarioGeometry::reference_layout(), &PathLossModel::default(), 1.0, seed).unwrap()
}

fn random_pattern(n: usize, rng: &mut ChaCha8Rng) -> ReflectPattern {
    let phases: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    ReflectPattern::from_phases(&phases)
}

fn random_covariance(m: usize, p0: f64, rng: &mut ChaCha8Rng) -> TransmitCovariance {
    let w = DMatrix::from_fn(m, m, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let r = &w * w.adjoint();
    let r = r.clone() * C64::from(p0 / r.trace().re);
    TransmitCovariance::new((&r + r.adjoint()) * C64::from(0.5), p0).unwrap()
}

// channel_model

proptest! {
    #[test]
    fn steering_norms_and_orthogonality(theta in -1.5f64..1.5, n in 1usize..=64) {
        let geom = ArrayGeometry::new(4, 4, n).unwrap();
        let a = steering_irs(theta, n, &geom);
        let ad = steering_derivative(theta, n, &geom);
        prop_assert!((a.norm_squared() - n as f64).abs() <= 1e-12 * n as f64);
        prop_assert!(a.dotc(&ad).norm() <= 1e-12);
        let d = ramp(n);
        let d1a: f64 = (0..n).map(|i| (d[i] * a[i]).norm_sqr()).sum();
        let want = (n * (n * n - 1)) as f64 / 3.0;
        prop_assert!((d1a - want).abs() <= 1e-10 * want.max(1.0));
    }

    #[test]
    fn channel_is_pure_in_its_inputs(code in 0u8..3, seed in any::<u64>(), n in 1usize..40) {
        let kind = kind_from(code);
        prop_assert_eq!(draw(kind, 4, 3, n, seed), draw(kind, 4, 3, n, seed));
    }
}

// metrics

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn crb_approx_never_exceeds_crb(seed in any::<u64>(), n in 2usize..24, code in 0u8..3, fully in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = draw(kind_from(code), 4, 4, n, seed);
        let arch = if fully { Architecture::FullyPassive } else { Architecture::SemiPassive };
        let v = random_pattern(n, &mut rng);
        let r = random_covariance(4, 1.0, &mut rng);
        let spec = SensingSpec::default();
        if let (Ok(exact), Ok(approx)) = (crb(arch, &r, &v, &ch, &spec), crb_approx(arch, &r, &v, &ch, &spec)) {
            prop_assert!(approx <= exact * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #[test]
    fn snr_scales_exactly(seed in any::<u64>(), n in 1usize..20, k in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ch = draw(ChannelKind::Rayleigh, 4, 4, n, seed);
        let v = random_pattern(n, &mut rng);
        let r = random_covariance(4, 1.0, &mut rng);
        let spec = SensingSpec::default();
        for arch in Architecture::BOTH {
            let base = snr(arch, &r, &v, &ch, &spec).unwrap();
            let r_k = TransmitCovariance::new(r.r() * C64::from(k), k).unwrap();
            prop_assert!((snr(arch, &r_k, &v, &ch, &spec).unwrap() / (k * base) - 1.0).abs() < 1e-12);
            let noisy = SensingSpec { sigma2: spec.sigma2 * k, ..spec };
            prop_assert!((snr(arch, &r, &v, &ch, &noisy).unwrap() * k / base - 1.0).abs() < 1e-12);
            let alpha = ch.alpha;
            ch.alpha = alpha * k.sqrt();
            prop_assert!((snr(arch, &r, &v, &ch, &spec).unwrap() / (k * base) - 1.0).abs() < 1e-12);
            ch.alpha = alpha;
        }
    }

    #[test]
    fn detection_monotone_in_power_and_noise(seed in any::<u64>(), n in 1usize..12, k in 1.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = draw(ChannelKind::Rayleigh, 4, 4, n, seed);
        let v = random_pattern(n, &mut rng);
        let r = random_covariance(4, 1e-6, &mut rng);
        let spec = SensingSpec::default();
        for arch in Architecture::BOTH {
            let base = detection_probability(arch, &r, &v, &ch, &spec).unwrap();
            let more = TransmitCovariance::new(r.r() * C64::from(k), 1e-6 * k).unwrap();
            prop_assert!(detection_probability(arch, &more, &v, &ch, &spec).unwrap() >= base);
            let noisy = SensingSpec { sigma2: spec.sigma2 * k, ..spec };
            prop_assert!(detection_probability(arch, &r, &v, &ch, &noisy).unwrap() <= base);
        }
    }

    #[test]
    fn semi_passive_crb_ignores_receive_channel(seed in any::<u64>(), n in 2usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = draw(ChannelKind::Rayleigh, 4, 4, n, seed);
        let v = random_pattern(n, &mut rng);
        let r = random_covariance(4, 1.0, &mut rng);
        let spec = SensingSpec::default();
        let mut other = ch.clone();
        other.g_r = DMatrix::from_fn(4, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let a = crb(Architecture::SemiPassive, &r, &v, &ch, &spec);
        let b = crb(Architecture::SemiPassive, &r, &v, &other, &spec);
        prop_assert_eq!(a.ok(), b.ok());
    }
}

#[test]
fn marcum_monotone_on_grid() {
    let grid: Vec<f64> = (0..=60).map(|i| i as f64 * 0.2).collect();
    for &a in &grid {
        let mut prev = f64::INFINITY;
        for &b in &grid {
            let q = marcum_q1(a, b);
            assert!((0.0..=1.0).contains(&q));
            assert!(q <= prev, "b-monotonicity at a={a}, b={b}");
            prev = q;
        }
    }
    for &b in &grid {
        let mut prev = 0.0;
        for &a in &grid {
            let q = marcum_q1(a, b);
            assert!(q >= prev, "a-monotonicity at a={a}, b={b}");
            prev = q;
        }
    }
}

// beamforming

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn optimized_patterns_are_feasible_and_beat_alignment(seed in any::<u64>(), n in 4usize..24, sdr in any::<bool>()) {
        let ch = draw(ChannelKind::Rayleigh, 4, 4, n, seed);
        let backend = if sdr { Backend::SdrSca } else { Backend::CoordinateAscent };
        let opts = OptimizerOptions::default().with_backend(backend);
        let res = maximize_snr(Architecture::FullyPassive, &ch, &opts).unwrap();
        prop_assert!(res.v.v().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        prop_assert!(res.objective_trace.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(res.objective <= res.relaxation_bound.unwrap() * (1.0 + 1e-6));
        let aligned = appendix_aligned_pattern(AlignKind::AlignColumn, &ch.g_t_hat(), 0, ch.theta, &ch.geom).unwrap();
        prop_assert!(res.objective >= snr_gain(Architecture::FullyPassive, &aligned, &ch).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn crb_design_respects_power_budget(seed in any::<u64>(), n in 4usize..20, fully in any::<bool>()) {
        let ch = draw(ChannelKind::Rayleigh, 4, 4, n, seed);
        let arch = if fully { Architecture::FullyPassive } else { Architecture::SemiPassive };
        let opts = OptimizerOptions::default().with_backend(Backend::CoordinateAscent);
        let p0 = 1.0;
        let res = minimize_crb(arch, &ch, &SensingSpec::default(), p0, &opts).unwrap();
        let r = res.r.unwrap();
        prop_assert!(r.r().trace().re <= p0 * (1.0 + 1e-9));
        let eig = r.r().clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.min() >= -1e-9 * p0);
        prop_assert!(res.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

// analysis

#[test]
fn gamma_bounds_ordered_on_grid() {
    for n in 1..=256 {
        for m_t in 1..=8 {
            for m_r in 1..=8 {
                for q in Gamma::ALL {
                    let b = gamma_bounds(q, n, m_t, m_r).unwrap();
                    assert!(b.lower <= b.upper, "{q:?} n={n} m_t={m_t} m_r={m_r}: {} > {}", b.lower, b.upper);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn los_threshold_is_the_equality_point(l in 1e-6f64..0.9, m_t in 1usize..=8, m_r in 1usize..=8, n in 1usize..200) {
        // Both closed forms are monomials in N, so one evaluation pins the
        // real equality point.
        let fully = los_optimal_snr(Architecture::FullyPassive, n, l, m_t, m_r, 1.0, 1.0, 1.0);
        let semi = los_optimal_snr(Architecture::SemiPassive, n, l, m_t, m_r, 1.0, 1.0, 1.0);
        let equal_at = n as f64 / (fully / semi).sqrt();
        let th = crossover_threshold(ThresholdKind::LosSnr, l, m_t, m_r).unwrap();
        prop_assert!((th / equal_at - 1.0).abs() < 1e-12);
    }
}

// experiments

fn small_config() -> ScenarioConfig {
    ScenarioConfig {
        name: "prop".into(),
        n_list: vec![6, 10, 14],
        channels: vec![ChannelKind::Rayleigh, ChannelKind::Rician { k_factor: 1.0 }],
        trials: 5,
        schemes: Scheme::ALL.to_vec(),
        ..ScenarioConfig::default()
    }
}

#[test]
fn sweeps_are_deterministic_and_thread_independent() {
    for objective in [Objective::Snr, Objective::Crb] {
        let base = ScenarioConfig { objective, threads: Some(1), ..small_config() };
        let a = run_sweep(&base).unwrap();
        let b = run_sweep(&ScenarioConfig { threads: Some(3), ..base.clone() }).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.aggregates, b.aggregates);
        let dir = std::env::temp_dir().join(format!("irs-sense-prop-{}-{objective:?}", std::process::id()));
        let f1 = write_outputs(&a, &dir.join("a")).unwrap();
        let f2 = write_outputs(&run_sweep(&base).unwrap(), &dir.join("b")).unwrap();
        for (x, y) in f1.all().iter().zip(f2.all()) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

#[test]
fn aggregates_follow_the_linear_mean_law() {
    let res = run_sweep(&ScenarioConfig { objective: Objective::Crb, ..small_config() }).unwrap();
    assert!(to_csv(&res).lines().count() == res.rows.len() + 2);
    for agg in &res.aggregates {
        let vals: Vec<f64> = res
            .rows
            .iter()
            .filter(|r| r.n == agg.n && r.arch == agg.arch && r.scheme == agg.scheme && r.metric == agg.metric)
            .map(|r| r.value)
            .filter(|v| !v.is_nan())
            .collect();
        assert_eq!(vals.len(), agg.trials);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        if mean.is_infinite() {
            assert!(agg.mean_linear.is_infinite());
            continue;
        }
        assert!((agg.mean_linear / mean - 1.0).abs() < 1e-12);
        assert!((agg.mean_db - 10.0 * mean.log10()).abs() < 1e-9);
    }
}
