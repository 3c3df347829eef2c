use anosov_bench::{product_gens, product_table, sl2_word, sl3_word};
use anosov_core::cone::{direction_grid, growth_at_direction, GrowthOptions};
use anosov_core::group::{cartan_projection, jordan_projection, kak_decompose};
use anosov_core::symmetric::{h_cartan_projection, PairKind, SymmetricPairDescriptor};
use anosov_core::words::{enumerate_ball, EnumerateOptions};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn projections(c: &mut Criterion) {
    let g2 = sl2_word(8);
    let g3 = sl3_word(8);
    c.bench_function("cartan_projection_sl2", |b| {
        b.iter(|| cartan_projection(black_box(&g2)).unwrap())
    });
    c.bench_function("cartan_projection_sl3", |b| {
        b.iter(|| cartan_projection(black_box(&g3)).unwrap())
    });
    c.bench_function("jordan_projection_sl3", |b| {
        b.iter(|| jordan_projection(black_box(&g3)).unwrap())
    });
    c.bench_function("kak_decompose_sl3", |b| {
        b.iter(|| kak_decompose(black_box(&g3)).unwrap())
    });
}

fn enumeration(c: &mut Criterion) {
    let gens = product_gens();
    let mut group = c.benchmark_group("enumerate");
    group.sample_size(10);
    group.bench_function("product_depth_7", |b| {
        b.iter(|| {
            enumerate_ball(
                black_box(&gens),
                7,
                &EnumerateOptions { threads: 4, ..Default::default() },
            )
            .unwrap()
        })
    });
    group.finish();
}

fn counting(c: &mut Criterion) {
    let table = product_table(8);
    let gens = product_gens();
    let min_letter = gens
        .generators
        .iter()
        .map(|g| cartan_projection(g).unwrap().norm())
        .fold(f64::INFINITY, f64::min);
    let opts = GrowthOptions::new(min_letter);
    let grid = direction_grid(&gens.descriptor, 5).unwrap();
    let mut group = c.benchmark_group("growth");
    group.sample_size(10);
    group.bench_function("direction_fit_depth_8", |b| {
        b.iter(|| growth_at_direction(black_box(&table), &grid[2], &opts).unwrap())
    });
    group.finish();
}

fn symmetric(c: &mut Criterion) {
    let gens = product_gens();
    let pair =
        SymmetricPairDescriptor::new(PairKind::FactorSwap, gens.descriptor.clone()).unwrap();
    let g = gens.element_of_word(&[1, 2, -1, 2, 1]).unwrap();
    c.bench_function("h_cartan_projection_swap", |b| {
        b.iter(|| h_cartan_projection(black_box(&g), &pair).unwrap())
    });
}

criterion_group!(benches, projections, enumeration, counting, symmetric);
criterion_main!(benches);
