//! Seeded random graphs and forms for property tests.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{FundamentalGraph, GraphBuilder, OneForm};

/// A random valid fundamental graph with 1..=`max_nu` vertices in dimension
/// `d`: a random tree plus extra edges (parallel edges and loops included)
/// with indices in {−1, 0, 1}ᵈ, resampled until the graph validates.
pub fn random_graph(seed: u64, max_nu: usize, d: usize) -> FundamentalGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let nu = rng.gen_range(1..=max_nu);
        let mut b = GraphBuilder::new(d);
        for v in 0..nu {
            b.vertex_with(format!("v{v}"), rng.gen_range(-2.0..2.0), 1.0);
        }
        let random_index = |rng: &mut ChaCha8Rng| -> Vec<i64> { (0..d).map(|_| rng.gen_range(-1..=1)).collect() };
        for v in 1..nu {
            let u = rng.gen_range(0..v);
            let index = if rng.gen_bool(0.3) { random_index(&mut rng) } else { vec![0; d] };
            if rng.gen_bool(0.5) {
                b.edge(u, v, &index);
            } else {
                b.edge(v, u, &index);
            }
        }
        let extra = rng.gen_range(d..=d + 3);
        for _ in 0..extra {
            let u = rng.gen_range(0..nu);
            let v = if rng.gen_bool(0.3) { u } else { rng.gen_range(0..nu) };
            let index = random_index(&mut rng);
            b.edge(u, v, &index);
        }
        if let Ok(graph) = b.build() {
            return graph;
        }
    }
}

/// A random 1-form with values in (−2π, 2π).
pub fn random_form(seed: u64, edges: usize) -> OneForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    OneForm::new((0..edges).map(|_| rng.gen_range(-2.0 * PI..2.0 * PI)).collect())
}

/// A random vertex function with values in (−`scale`, `scale`).
pub fn random_vertex_function(seed: u64, vertices: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..vertices).map(|_| rng.gen_range(-scale..scale)).collect()
}
