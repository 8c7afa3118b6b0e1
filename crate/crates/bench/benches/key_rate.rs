use std::hint::black_box;

use ampqkd_core::optimizer::optimize_encoding;
use ampqkd_core::photon_encoding::AnalysisOptions;
use ampqkd_core::{
    split_line, EncodingConfig, EveMethod, LineGeometry, OptimizationBudget, PhaseEncoding, PhotonNumberEncoding,
    Scheme,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn photon() -> EncodingConfig {
    PhotonNumberEncoding::new(11570.78, 31873.3, [2126.5, 0.0889, 19273.9, 76956.4])
        .unwrap()
        .into()
}

fn key_rate(c: &mut Criterion) {
    let line = split_line(&LineGeometry::new(1000.0, 500.0), 1.4e-6).unwrap();
    let phase: EncodingConfig = PhaseEncoding::new(33.5, 0.8, 4.5).unwrap().into();
    let photon = photon();

    let mut g = c.benchmark_group("key_rate_1000km");
    g.bench_function("photon_number_exact", |b| b.iter(|| photon.key_rate(black_box(&line)).unwrap()));
    g.bench_function("photon_number_asymptotic", |b| {
        let opts = AnalysisOptions {
            method: EveMethod::Asymptotic,
            ..AnalysisOptions::default()
        };
        b.iter(|| photon.key_rate_with(black_box(&line), opts).unwrap())
    });
    g.bench_function("phase", |b| b.iter(|| phase.key_rate(black_box(&line)).unwrap()));
    g.finish();
}

fn optimizer(c: &mut Criterion) {
    let line = split_line(&LineGeometry::new(1000.0, 500.0), 1.4e-6).unwrap();
    let mut g = c.benchmark_group("optimize_1000km");
    g.sample_size(10);
    g.bench_function("phase_default_budget", |b| {
        b.iter(|| optimize_encoding(Scheme::Phase, black_box(&line), &OptimizationBudget::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, key_rate, optimizer);
criterion_main!(benches);
