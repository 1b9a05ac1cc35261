use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dmfsense::dsp::{self, Complex64};
use dmfsense::{
    measure_channel, ChannelOccupancy, DeviceGeometry, FaultSpec, HexArray, Liquid, LiquidLibrary,
    SensingConfig, Simulator,
};

fn simulator() -> Simulator {
    let library = LiquidLibrary::new()
        .with(Liquid::new("water", 80.0).unwrap())
        .unwrap()
        .with(Liquid::new("oil", 2.0).unwrap())
        .unwrap();
    Simulator::new(
        HexArray::new(8).unwrap(),
        DeviceGeometry::default(),
        library,
        SensingConfig::default(),
    )
    .unwrap()
}

fn fft_256(c: &mut Criterion) {
    let input: Vec<Complex64> = (0..256)
        .map(|i| Complex64::new((i as f64 * 0.37).sin(), 0.0))
        .collect();
    c.bench_function("fft_256", |b| {
        b.iter_batched_ref(
            || input.clone(),
            |buf| dsp::fft(black_box(buf)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn channel(c: &mut Criterion) {
    let config = SensingConfig::default();
    let mut seed = 0u64;
    c.bench_function("measure_channel", |b| {
        b.iter(|| {
            seed += 1;
            measure_channel(black_box(1.24e-12), &config, seed).unwrap()
        })
    });
}

fn full_scan(c: &mut Criterion) {
    let sim = simulator();
    let thresholds = sim.calibrate("oil", "water", 1).unwrap();
    let occupancy = sim.uniform(ChannelOccupancy::Medium("oil".into()));
    let faults = FaultSpec::none();
    let mut scan_index = 0;
    c.bench_function("scan_all_169", |b| {
        b.iter(|| {
            scan_index += 1;
            sim.scan_all(&occupancy, &faults, &thresholds, 7, scan_index)
                .unwrap()
        })
    });
}

criterion_group!(benches, fft_256, channel, full_scan);
criterion_main!(benches);
