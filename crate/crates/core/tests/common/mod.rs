#![allow(dead_code)]

use std::sync::Arc;

use fqdist::distgraph::DistanceGraphFamily;
use fqdist::expander::{random_gnp_graph, ColoredFamily};
use fqdist::gf::{FieldSpec, PointSpace};
use fqdist::haxell::{check_hypotheses, HypothesisReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn space(q: u64, d: usize) -> PointSpace {
    PointSpace::new(Arc::new(FieldSpec::of_order(q).unwrap()), d).unwrap()
}

pub fn distance_family(q: u64, d: usize, radii: &[u64]) -> Arc<DistanceGraphFamily> {
    let space = space(q, d);
    let radii = radii.iter().map(|&r| space.field().element(r).unwrap()).collect();
    Arc::new(DistanceGraphFamily::new(space, radii).unwrap())
}

pub fn all_distances(q: u64, d: usize) -> Arc<DistanceGraphFamily> {
    Arc::new(DistanceGraphFamily::all_distances(space(q, d)).unwrap())
}

pub fn colored(q: u64, d: usize, radii: &[u64]) -> ColoredFamily {
    ColoredFamily::from_distance(distance_family(q, d, radii)).unwrap()
}

/// A seeded host with one independent G(n, p) per color.
pub fn gnp_host(n: usize, t: usize, p: f64, seed: u64) -> ColoredFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adj = (0..t).map(|_| random_gnp_graph(n, p, &mut rng)).collect();
    ColoredFamily::from_adjacency(adj).unwrap()
}

pub struct SyntheticHost {
    pub seed: u64,
    pub n: usize,
    pub t: usize,
    pub m: usize,
    pub family: ColoredFamily,
    pub hypotheses: HypothesisReport,
}

/// The first `count` seeded hosts on which the expansion hypotheses hold
/// with Δ = 2 and some k ≥ 1, cycling through (n, t, m) shapes.
pub fn synthetic_hosts(count: usize, delta: u32) -> Vec<SyntheticHost> {
    const SHAPES: [(usize, usize, usize, f64); 4] = [(12, 1, 1, 0.7), (14, 2, 1, 0.5), (16, 2, 2, 0.6), (20, 1, 2, 0.75)];
    let mut hosts = Vec::new();
    let mut seed = 0u64;
    while hosts.len() < count {
        let (n, t, m, p) = SHAPES[seed as usize % SHAPES.len()];
        let family = gnp_host(n, t, p, seed);
        let probe = check_hypotheses(&family, delta, m, 1).unwrap();
        if probe.holds() {
            let k = probe.max_k.unwrap() as usize;
            let hypotheses = check_hypotheses(&family, delta, m, k).unwrap();
            assert!(hypotheses.holds());
            hosts.push(SyntheticHost { seed, n, t, m, family, hypotheses });
        }
        seed += 1;
    }
    hosts
}
