//! Pipeline stages on the global rayon pool against a one-thread pool.
//!
//! Build with `--no-default-features` to time the sequential fallback; the
//! group label records which build produced the numbers.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;

use uacsound::channel_sim::apply_channel;
use uacsound::config::Settings;
use uacsound::estimator::{filterbank_estimate, tvir_from_tvfr};
use uacsound::pipeline;
use uacsound::signal_gen::synthesize_multitone;

const BUILD: &str = if cfg!(feature = "parallel") {
    "rayon"
} else {
    "sequential"
};

fn settings() -> Settings {
    let mut s = Settings::from_preset("paper-ch8", 0).unwrap();
    s.sounding.duration = 1.0;
    s
}

fn stages(c: &mut Criterion) {
    let s = settings();
    let x = synthesize_multitone(&s.sounding).unwrap();
    let y = apply_channel(&x, &s.channel).unwrap();
    let m = uacsound::estimator::default_decimation(&s.sounding);
    let h = filterbank_estimate(&y, &s.sounding, m).unwrap().steady();

    let pools = [
        ("global", None),
        (
            "one-thread",
            Some(ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ),
    ];
    let mut g = c.benchmark_group(format!("stages/{BUILD}"));
    g.sample_size(10);
    for (label, pool) in &pools {
        let run = |f: &mut (dyn FnMut() + Send)| match pool {
            Some(p) => p.install(f),
            None => f(),
        };
        g.bench_function(BenchmarkId::new("simulate", label), |b| {
            b.iter(|| run(&mut || drop(black_box(apply_channel(&x, &s.channel).unwrap()))))
        });
        g.bench_function(BenchmarkId::new("estimate", label), |b| {
            b.iter(|| {
                run(&mut || drop(black_box(filterbank_estimate(&y, &s.sounding, m).unwrap())))
            })
        });
        g.bench_function(BenchmarkId::new("impulse_response", label), |b| {
            b.iter(|| run(&mut || drop(black_box(tvir_from_tvfr(&h, 16).unwrap()))))
        });
        g.bench_function(BenchmarkId::new("analyze_paths", label), |b| {
            b.iter(|| run(&mut || drop(black_box(pipeline::analyze_paths(&h, &s).unwrap()))))
        });
    }
    g.finish();
}

fn end_to_end(c: &mut Criterion) {
    let s = settings();
    let pool = ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut g = c.benchmark_group(format!("run_channel/{BUILD}"));
    g.sample_size(10);
    g.bench_function("global", |b| {
        b.iter(|| black_box(pipeline::run_channel("8", &s).unwrap()))
    });
    g.bench_function("one-thread", |b| {
        b.iter(|| pool.install(|| black_box(pipeline::run_channel("8", &s).unwrap())))
    });
    g.finish();
}

criterion_group!(benches, stages, end_to_end);
criterion_main!(benches);
