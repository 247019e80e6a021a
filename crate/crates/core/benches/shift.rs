use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nslab::flow::{Form, StepperConfig};
use nslab::front::{shift_front, solve_nu, Branch, Exec, ShiftSource};
use nslab::media::{linear_medium, linear_medium_front};

fn shift(c: &mut Criterion) {
    let (chart, sym) = linear_medium();
    let cfg = StepperConfig::rk4(1e-3, 0.5);
    let mut group = c.benchmark_group("shift_front");
    group.sample_size(10);
    for samples in [64, 256] {
        let mesh = solve_nu(
            &sym,
            &chart,
            &linear_medium_front(samples).unwrap(),
            Branch::Positive,
        )
        .unwrap();
        let source = ShiftSource {
            symbol: Some(sym.clone()),
            force: None,
        };
        for exec in [Exec::Sequential, Exec::Parallel] {
            group.bench_with_input(
                BenchmarkId::new(format!("{exec:?}").to_lowercase(), samples),
                &mesh,
                |b, mesh| {
                    b.iter(|| {
                        shift_front(
                            &source,
                            &chart,
                            black_box(mesh),
                            Form::Modified,
                            &cfg,
                            &[0.25, 0.5],
                            exec,
                        )
                        .unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, shift);
criterion_main!(benches);
