use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use cqec::bitflip_code;
use cqec::control::{ExponentialFilter, FilterParams, RecordFilter};
use cqec::dynamics::{SmeStepper, SseStepper};
use cqec::quantum::DensityMatrix;
use cqec::simulator::Simulation;
use cqec::stochastic::TrajectoryNoise;
use cqec_bench::{increment_block, short_fig2, short_hardware, step_input};

fn steps(c: &mut Criterion) {
    let code = bitflip_code();
    let g = [-0.5, 0.0, 0.0];
    let p = step_input(&g);
    let incs = increment_block(1024, 2, 3);

    let mut group = c.benchmark_group("step");
    group.bench_function("sse_bitflip3", |b| {
        let mut st = SseStepper::new(&code);
        let mut psi = code.initial_codeword().clone();
        let p = cqec::dynamics::StepInput { eta: 1.0, ..p };
        let mut dq = [0.0; 2];
        let mut i = 0;
        b.iter(|| {
            st.step(&mut psi, &incs[i & 1023], &p, &mut dq).unwrap();
            i += 1;
            black_box(&dq);
        })
    });
    group.bench_function("sme_bitflip3", |b| {
        let mut st = SmeStepper::new(&code);
        let mut rho = DensityMatrix::from_pure(code.initial_codeword());
        let mut dq = [0.0; 2];
        let mut i = 0;
        b.iter(|| {
            st.step(&mut rho, &incs[i & 1023], &p, &mut dq, false)
                .unwrap();
            i += 1;
            black_box(&dq);
        })
    });
    group.bench_function("sme_positivity_check", |b| {
        let rho = DensityMatrix::from_pure(code.initial_codeword());
        b.iter(|| black_box(rho.min_eigenvalue()))
    });
    group.bench_function("noise_sample", |b| {
        let mut noise = TrajectoryNoise::new(3, 0, 2, 3);
        let mut inc = cqec::dynamics::Increments::zeros(2, 3);
        let probs = [1e-5; 3];
        b.iter(|| {
            inc.sample(&mut noise, &probs, 1e-4);
            black_box(&inc);
        })
    });
    group.finish();
}

fn filter(c: &mut Criterion) {
    let params = FilterParams {
        rate: 20.0,
        window: 0.15,
        dt: 1e-4,
        kappa: 150.0,
        early_feedback: false,
    };
    c.bench_function("filter_update_m1500", |b| {
        let mut f = ExponentialFilter::new(params).unwrap();
        let mut x: f64 = 0.0;
        b.iter(|| {
            x += 1e-3;
            black_box(f.update(x.sin()))
        })
    });
}

fn trajectories(c: &mut Criterion) {
    let mut group = c.benchmark_group("trajectory");
    group.sample_size(10);
    let fig2 = Simulation::new(short_fig2(0.2, 1)).unwrap();
    group.bench_function("fig2_2000_steps", |b| {
        b.iter_batched(
            || (),
            |_| black_box(fig2.run_trajectory(0)),
            BatchSize::SmallInput,
        )
    });
    let hw = Simulation::new(short_hardware(2e-5)).unwrap();
    group.bench_function("hardware_20000_steps", |b| {
        b.iter(|| black_box(hw.run_trajectory(0)))
    });
    group.finish();
}

criterion_group!(benches, steps, filter, trajectories);
criterion_main!(benches);
