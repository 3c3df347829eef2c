//! Shared builders for the benchmark suite: fixture words and pre-enumerated
//! tables, kept here so individual benchmarks stay declarative.

use anosov_core::fixtures;
use anosov_core::group::GroupElement;
use anosov_core::words::{enumerate_ball, EnumerateOptions, GeneratorSystem, OrbitTable};

pub fn sl2_word(len: usize) -> GroupElement {
    let gens = fixtures::sl2_ball_fixture();
    let word: Vec<i16> = (0..len).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
    gens.element_of_word(&word).unwrap()
}

pub fn sl3_word(len: usize) -> GroupElement {
    let gens = fixtures::sl3_fixture();
    let word: Vec<i16> = (0..len).map(|i| if i % 2 == 0 { 1 } else { -2 }).collect();
    gens.element_of_word(&word).unwrap()
}

pub fn product_gens() -> GeneratorSystem {
    fixtures::product_schottky_fixture()
}

pub fn product_table(depth: u32) -> OrbitTable {
    enumerate_ball(
        &product_gens(),
        depth,
        &EnumerateOptions { threads: 4, ..Default::default() },
    )
    .unwrap()
}
