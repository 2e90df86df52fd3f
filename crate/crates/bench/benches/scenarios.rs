use bems_bench::DayFixture;
use bems_core::pipeline::scenarios_from_totals;
use bems_core::scenario::generate;
use bems_core::HistoryModel;
use chrono::Datelike;
use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scenarios(c: &mut Criterion) {
    let fx = DayFixture::new(5);
    let cfg = &fx.cfg;
    let doy = fx.date.ordinal();

    c.bench_function("history_model", |b| {
        b.iter(|| HistoryModel::from_dataset(&fx.data, fx.date, &cfg.location, &cfg.plant, &cfg.stochastic).unwrap())
    });
    c.bench_function("total_matrices", |b| {
        b.iter(|| fx.history.total_for_day(&fx.forecast, doy, cfg.stochastic.lambda).unwrap())
    });
    c.bench_function("draw_100", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| generate(&fx.gen_total, &fx.dem_total, cfg.stochastic.samples, cfg.stochastic.mode, &mut rng).unwrap())
    });
    c.bench_function("draw_score_select", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| scenarios_from_totals(&fx.gen_total, &fx.dem_total, &cfg.stochastic, &cfg.location, doy, &mut rng).unwrap())
    });
}

criterion_group!(benches, scenarios);
criterion_main!(benches);
