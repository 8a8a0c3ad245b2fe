//! Seeded random instances shared by the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ubsga::{QapInstance, TopInstance, Vertex};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric integer QAP of size `n` with a zero diagonal.
pub fn random_qap(n: usize, seed: u64) -> QapInstance {
    let mut r = rng(seed);
    let sym = |r: &mut ChaCha8Rng| {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = r.random_range(0..100) as f64;
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        m
    };
    let flow = sym(&mut r);
    let dist = sym(&mut r);
    QapInstance::new(n, flow, dist).expect("square matrices")
}

/// Uniform points in a 50x50 square, first and last vertex as terminals.
pub fn random_top(n: usize, paths: usize, tmax: f64, seed: u64) -> TopInstance {
    let mut r = rng(seed);
    let vertices = (0..n)
        .map(|i| Vertex {
            x: r.random_range(0.0..50.0),
            y: r.random_range(0.0..50.0),
            score: if i == 0 || i == n - 1 { 0.0 } else { r.random_range(1..=20) as f64 },
        })
        .collect();
    TopInstance::new(vertices, 0, n - 1, paths, tmax).expect("valid instance")
}
