#![allow(dead_code)]

use nlperi::grid::GridVectorField;
use nlperi::random::BandLimited;
use rand::Rng;

pub fn field(n: usize, kmax: usize, seed: u64) -> GridVectorField<f64> {
    BandLimited::new(kmax).decay(1.0).sample(n, seed).unwrap()
}

/// i.i.d. uniform grid values, not band limited.
pub fn rough(n: usize, m: usize, seed: u64) -> GridVectorField<f64> {
    let mut rng = nlperi::random::rng(seed);
    let data = (0..n * n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridVectorField::new(n, m, data).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn max_diff(a: &GridVectorField<f64>, b: &GridVectorField<f64>) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
