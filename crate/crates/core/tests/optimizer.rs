use ampqkd_core::optimizer::{
    optimize_encoding, optimize_encoding_from, sweep_leak_fraction, worst_case_eve, worst_case_eve_over,
};
use ampqkd_core::{
    split_line, EffectiveLine, EncodingConfig, LineGeometry, OptimizationBudget, PhaseEncoding,
    PhotonNumberEncoding, Scheme, SweepMode,
};

fn quick() -> OptimizationBudget {
    OptimizationBudget::new(6, 300)
}

#[test]
fn ideal_line_reaches_one_bit() {
    let geom = LineGeometry::new(0.0, 0.0);
    for scheme in [Scheme::PhotonNumber, Scheme::Phase] {
        let mode = SweepMode::Optimize {
            scheme,
            budget: quick(),
        };
        let rows = sweep_leak_fraction(&geom, &[0.0], mode).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].rate.normalized_rate > 0.999, "{scheme}: {:?}", rows[0].rate);
    }
}

#[test]
fn photon_number_optimum_at_1000_km() {
    let line = split_line(&LineGeometry::new(1000.0, 500.0), 1.4e-6).unwrap();
    let res = optimize_encoding(Scheme::PhotonNumber, &line, &quick()).unwrap();
    assert!(!res.infeasible);
    assert!(res.best_rate.normalized_rate > 0.99, "{:?}", res.best_rate);
    let EncodingConfig::PhotonNumber(e) = res.best_encoding else {
        panic!("wrong scheme")
    };
    assert!(e.mu0 < e.mean_photons() && e.mean_photons() < e.mu1);
    for mu in [e.mu0, e.mu1] {
        assert!((5e3..3.5e4).contains(&mu), "{e:?}");
    }
    e.validate().unwrap();
    assert!(res.evaluations > 0);
}

#[test]
fn phase_optimum_at_1000_km() {
    let line = split_line(&LineGeometry::new(1000.0, 500.0), 1.4e-6).unwrap();
    let res = optimize_encoding(Scheme::Phase, &line, &OptimizationBudget::default()).unwrap();
    assert!((res.best_rate.normalized_rate - 0.98).abs() < 0.01, "{:?}", res.best_rate);
    assert!(res.converged);
    let n = res.best_encoding.mean_photons();
    assert!((4e2..7.2e3).contains(&n), "{n}");
}

#[test]
fn overwhelming_leak_is_infeasible() {
    let line = split_line(&LineGeometry::new(40000.0, 20000.0), 0.9).unwrap();
    let res = optimize_encoding(Scheme::Phase, &line, &quick()).unwrap();
    assert!(res.infeasible);
    assert_eq!(res.best_rate.normalized_rate, 0.0);
    assert!(res.best_rate.terminated());
}

#[test]
fn candidates_are_never_lost() {
    let line = split_line(&LineGeometry::new(1000.0, 500.0), 1e-4).unwrap();
    let good: EncodingConfig = PhaseEncoding::new(25.0, 5.0, 60.0).unwrap().into();
    let own = good.key_rate(&line).unwrap().normalized_rate;
    let budget = OptimizationBudget::new(1, 1);
    let res = optimize_encoding_from(Scheme::Phase, &line, &budget, &[good]).unwrap();
    assert!(res.best_rate.normalized_rate >= own);
}

#[test]
fn rejects_empty_budget() {
    let line = EffectiveLine::ideal(0.0).unwrap();
    assert!(optimize_encoding(Scheme::Phase, &line, &OptimizationBudget::new(0, 100)).is_err());
}

#[test]
fn optimized_sweep_is_non_increasing_and_reproducible() {
    let geom = LineGeometry::new(1000.0, 500.0);
    let grid = [1e-6, 1e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2];
    let mode = SweepMode::Optimize {
        scheme: Scheme::Phase,
        budget: quick(),
    };
    let rows = sweep_leak_fraction(&geom, &grid, mode).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].rate.normalized_rate <= w[0].rate.normalized_rate, "{w:?}");
    }
    for (row, r) in rows.iter().zip(grid) {
        assert_eq!(row.leak_fraction, r);
        assert_eq!(row.eve_position_km, 500.0);
    }
    let again = sweep_leak_fraction(&geom, &grid, mode).unwrap();
    assert_eq!(rows, again);
}

#[test]
fn fixed_sweep_is_monotone() {
    let geom = LineGeometry::new(1000.0, 250.0);
    let enc: EncodingConfig = PhotonNumberEncoding::new(9000.0, 25000.0, [2000.0, 0.0, 9000.0, 6e4])
        .unwrap()
        .into();
    let grid = [0.0, 1e-6, 1e-5, 1e-4, 1e-3];
    let rows = sweep_leak_fraction(&geom, &grid, SweepMode::Fixed(enc)).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].rate.raw_rate <= w[0].rate.raw_rate + 1e-12);
        assert_eq!(w[0].encoding, enc);
    }
}

#[test]
fn no_tap_means_no_position_dependence() {
    let geom = LineGeometry::new(1000.0, 0.0);
    let worst = worst_case_eve(Scheme::Phase, &geom, 0.0, &quick()).unwrap();
    assert_eq!(worst.profile.len(), 21);
    let rates: Vec<f64> = worst
        .profile
        .iter()
        .map(|p| p.result.best_rate.normalized_rate)
        .collect();
    let (lo, hi) = rates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi - lo < 1e-9, "{rates:?}");

    let enc: EncodingConfig = PhotonNumberEncoding::new(9000.0, 25000.0, [2000.0, 0.0, 9000.0, 6e4])
        .unwrap()
        .into();
    let reference = enc.key_rate(&split_line(&geom, 0.0).unwrap()).unwrap().normalized_rate;
    for km in geom.eve_grid().unwrap() {
        let line = split_line(&geom.with_eve_at(km), 0.0).unwrap();
        let r = enc.key_rate(&line).unwrap().normalized_rate;
        assert!((r - reference).abs() < 1e-9, "{km}: {r} vs {reference}");
    }
}

#[test]
fn phase_worst_case_sits_near_bob() {
    let geom = LineGeometry::new(40000.0, 0.0);
    let positions = [0.0, 10000.0, 20000.0, 30000.0, 39950.0, 40000.0];
    let worst = worst_case_eve_over(Scheme::Phase, &geom, 8.9e-6, &positions, &quick()).unwrap();
    assert_eq!(worst.eve_position_km, 40000.0);
    assert!(worst.profile.iter().all(|p| p.result.best_rate.normalized_rate >= worst.rate()));
}
