use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use geodemo::geomap::assign_geoid;
use geodemo::model::fit_sgd;
use geodemo::tokenize::Tokenizer;
use geodemo::TrainConfig;
use geodemo_bench::{grid_index, messages, points, sparse_problem};

fn tokenize(c: &mut Criterion) {
    let tokenizer = Tokenizer::default();
    let texts = messages(1000, 1);
    let mut group = c.benchmark_group("tokenize");
    group.throughput(Throughput::Elements(texts.len() as u64));
    group.bench_function("1000 messages", |b| {
        b.iter(|| {
            texts
                .iter()
                .map(|t| tokenizer.tokenize(black_box(t)).len())
                .sum::<usize>()
        })
    });
    group.finish();
}

fn assign(c: &mut Criterion) {
    let mut group = c.benchmark_group("assign_geoid");
    for side in [32, 128] {
        let index = grid_index(side);
        let pts = points(10_000, side, 2);
        group.throughput(Throughput::Elements(pts.len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(side * side), &pts, |b, pts| {
            b.iter(|| {
                pts.iter()
                    .filter(|p| assign_geoid(**p, &index).is_some())
                    .count()
            })
        });
    }
    group.finish();
}

fn sgd(c: &mut Criterion) {
    let (xs, ys) = sparse_problem(2000, 5000, 40, 3);
    let cfg = TrainConfig {
        lambda: 1e-4,
        eta0: 0.1,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("fit_sgd");
    group.sample_size(20);
    group.bench_function("2000x5000, 10 epochs", |b| {
        b.iter(|| fit_sgd(&xs, &ys, &cfg).expect("converges"))
    });
    group.finish();
}

criterion_group!(benches, tokenize, assign, sgd);
criterion_main!(benches);
