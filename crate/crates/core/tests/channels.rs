use ampqkd_core::channels::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

// P-function moments (|mean amplitude|^2, thermal variance) through a stage.
fn through(stage: Stage, (m, v): (f64, f64)) -> (f64, f64) {
    match stage {
        Stage::Loss(t) => (m * t, v * t),
        Stage::Amp(g) => (m * g, v * g + g - 1.0),
    }
}

fn pair_moments(c: ChannelPair, x: (f64, f64)) -> (f64, f64) {
    through(Stage::Amp(c.g), through(Stage::Loss(c.t), x))
}

// Explicit pairwise reduction: append (Loss t, Amp g) one stage at a time.
fn pairwise(m: u32, t: f64, g: f64) -> ChannelPair {
    let mut acc = ChannelPair::IDENTITY;
    for _ in 0..m {
        let moved = commute_amp_then_loss(acc.g, t).unwrap();
        let Stage::Loss(tl) = compose_same_kind(Stage::Loss(acc.t), Stage::Loss(moved.t)).unwrap()
        else {
            unreachable!()
        };
        let Stage::Amp(ga) = compose_same_kind(Stage::Amp(moved.g), Stage::Amp(g)).unwrap() else {
            unreachable!()
        };
        acc = ChannelPair { t: tl, g: ga };
    }
    acc
}

#[test]
fn commute_preserves_moments() {
    for (g, t) in [(2.0, 0.5), (1.5, 0.5), (7.0, 0.01), (1.0, 0.3)] {
        let c = commute_amp_then_loss(g, t).unwrap();
        for x in [(0.0, 0.0), (9.0, 0.0), (4.0, 2.5)] {
            let a = through(Stage::Loss(t), through(Stage::Amp(g), x));
            let b = pair_moments(c, x);
            assert!((a.0 - b.0).abs() < 1e-12 * a.0.max(1.0));
            assert!((a.1 - b.1).abs() < 1e-12 * a.1.max(1.0));
        }
    }
}

#[test]
fn reduce_chain_matches_pairwise_on_grid() {
    let ts = [0.01, 0.1, 0.5, 0.9, 1.0];
    let gs = [1.0, 1.5, 2.0, 10.0, 100.0];
    for m in 0..=12 {
        for &t in &ts {
            for &g in &gs {
                let fast = reduce_chain(m, t, g).unwrap();
                let slow = pairwise(m, t, g);
                assert!((fast.t - slow.t).abs() <= 1e-9 * slow.t, "T at M={m} t={t} g={g}");
                assert!((fast.g - slow.g).abs() <= 1e-9 * slow.g, "G at M={m} t={t} g={g}");
            }
        }
    }
}

#[test]
fn gain_compensating_limit_is_continuous() {
    let t = 0.1;
    let exact = reduce_chain(20, t, 1.0 / t).unwrap();
    // dG/dg near GT = 1 is about M + (G - 1) M (M - 1) t / 2 = 191
    for dg in [1e-12, 1e-10, 1e-8, 1e-6] {
        let near = reduce_chain(20, t, 1.0 / t + dg).unwrap();
        assert!((near.g - exact.g).abs() <= 200.0 * dg + 1e-12, "dg = {dg}");
    }
    // either side of the series guard
    let below = reduce_chain(20, t, (1.0 + 0.9e-9) / t).unwrap();
    let above = reduce_chain(20, t, (1.0 + 1.1e-9) / t).unwrap();
    let slope = (above.g - below.g) / (0.2e-9 / t);
    let reference = (reduce_chain(20, t, 1.0 / t + 1e-6).unwrap().g - exact.g) / 1e-6;
    assert!((slope - reference).abs() < 1e-2 * reference, "{slope} vs {reference}");
}

#[test]
fn photon_stats_match_chain_sampling() {
    // Coherent amplitude through 20 (loss, amplifier) spans, then photon counting.
    let (n0, m, t, g) = (1e4, 20u32, 0.1, 10.0);
    let s = output_photon_stats(n0, m, t, g, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let samples = 200_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let (mut re, mut im) = (f64::sqrt(n0), 0.0);
        for _ in 0..m {
            let k = (t * g).sqrt();
            let sd = ((g - 1.0) / 2.0).sqrt();
            re = k * re + sd * unit.sample(&mut rng);
            im = k * im + sd * unit.sample(&mut rng);
        }
        let n = Poisson::new(re * re + im * im).unwrap().sample(&mut rng);
        s1 += n;
        s2 += n * n;
    }
    let mean = s1 / samples as f64;
    let var = s2 / samples as f64 - mean * mean;
    let se_mean = (var / samples as f64).sqrt();
    assert!((mean - s.mean).abs() < 3.0 * se_mean, "{mean} vs {}", s.mean);
    // standard error of the sample standard deviation, roughly sd / sqrt(2n)
    let se_sd = var.sqrt() / (2.0 * samples as f64).sqrt();
    assert!((var.sqrt() - s.std_dev).abs() < 4.0 * se_sd, "{} vs {}", var.sqrt(), s.std_dev);
}

#[test]
fn strong_pulse_spread_scales_as_sqrt_n_g_m() {
    // delta n -> sqrt(n (2 M (G - 1) + 1)), i.e. sqrt(n G M) up to sqrt(2 (G - 1) / G)
    let (n, m, g) = (1e10, 20u32, 10.0);
    let s = output_photon_stats(n, m, 1.0 / g, g, 0.0).unwrap();
    let ratio = s.std_dev / (s.mean * g * f64::from(m)).sqrt();
    let limit = (2.0 * (g - 1.0) / g + 1.0 / (g * f64::from(m))).sqrt();
    assert!((ratio - limit).abs() < 1e-4, "{ratio} vs {limit}");
}

proptest! {
    #[test]
    fn eta_conserved_under_permutations(
        stages in prop::collection::vec((0.01f64..1.0, 1.0f64..50.0), 1..15),
    ) {
        let mut acc = ChannelPair::IDENTITY;
        let mut eta = 1.0;
        for (t, g) in stages {
            eta *= t * g;
            let moved = commute_amp_then_loss(acc.g, t).unwrap();
            prop_assert!((moved.eta() - acc.g * t).abs() <= 1e-12 * moved.eta());
            acc = ChannelPair { t: acc.t * moved.t, g: moved.g * g };
            prop_assert!(acc.t > 0.0 && acc.t <= 1.0 && acc.g >= 1.0);
        }
        prop_assert!((acc.eta() - eta).abs() <= 1e-10 * eta);
    }

    #[test]
    fn reduce_chain_mean_matches_stagewise_map(
        m in 0u32..30, t in 0.01f64..1.0, g in 1.0f64..120.0, n in 0.0f64..1e6,
    ) {
        let c = reduce_chain(m, t, g).unwrap();
        let mut stagewise = n;
        for _ in 0..m {
            stagewise = g * (t * stagewise) + (g - 1.0);
        }
        prop_assert!((c.mean_photons(n) - stagewise).abs() <= 1e-9 * stagewise.max(1.0));
        prop_assert!(((c.eta()) - (t * g).powi(m as i32)).abs() <= 1e-9 * c.eta());
    }

    #[test]
    fn split_line_total_noise_constant(k in 0u32..=20, xi in 0.005f64..0.05) {
        let geom = LineGeometry { span_km: 1000.0, eve_position_km: 50.0 * f64::from(k), amp_spacing_km: 50.0, attenuation_per_km: xi };
        let l = split_line(&geom, 0.0).unwrap();
        let l0 = split_line(&geom.with_eve_at(0.0), 0.0).unwrap();
        prop_assert!((l.pre_eve.g + l.post_eve.g - l0.pre_eve.g - l0.post_eve.g).abs() < 1e-9 * l0.post_eve.g);
    }
}
