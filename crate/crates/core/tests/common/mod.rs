//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use dvrft::lti::RationalTF;
use dvrft::network::{Graph, MultiSignal, NetworkSpec, ReferenceNodeSpec, SubsystemSpec};
use rand::Rng;

pub fn max_diff(a: &MultiSignal, b: &MultiSignal, n: usize) -> f64 {
    a.channels()
        .iter()
        .zip(b.channels())
        .flat_map(|(x, y)| {
            x.samples[..n]
                .iter()
                .zip(&y.samples[..n])
                .map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Stable three-node network with first-order dynamics and a coupled
/// reference model (small strictly proper `Q`, constant `P`).
pub fn random_coupled_spec(rng: &mut impl Rng) -> NetworkSpec {
    let edges: Vec<(usize, usize)> = if rng.random::<bool>() {
        vec![(0, 1), (1, 2)]
    } else {
        vec![(0, 1), (1, 2), (0, 2)]
    };
    let graph = Graph::new(3, edges).unwrap();
    let mut subs = Vec::new();
    let mut refs = Vec::new();
    for i in 0..3 {
        let a = uniform(rng, -0.8, 0.8);
        let gamma = uniform(rng, 0.2, 0.8);
        let nb = graph.neighbors(i);
        subs.push(SubsystemSpec {
            g: RationalTF::first_order(uniform(rng, 0.5, 2.0), a),
            w: nb
                .iter()
                .map(|&j| (j, RationalTF::first_order(uniform(rng, -0.3, 0.3), a)))
                .collect(),
            f: BTreeMap::new(),
        });
        refs.push(ReferenceNodeSpec {
            t: RationalTF::first_order(1.0 - gamma, gamma),
            q: nb
                .iter()
                .map(|&j| {
                    (
                        j,
                        RationalTF::first_order(uniform(rng, -0.2, 0.2), uniform(rng, -0.5, 0.5)),
                    )
                })
                .collect(),
            p: nb
                .iter()
                .map(|&j| (j, RationalTF::constant(uniform(rng, -0.8, 0.8))))
                .collect(),
        });
    }
    NetworkSpec::new(graph, subs, refs).unwrap()
}
