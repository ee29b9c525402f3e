//! Ready-made networks: the two-node coupled example and the nine-node grid.

use std::collections::BTreeMap;

use super::spec::{Graph, NetworkSpec, ReferenceNodeSpec, SubsystemSpec};
use crate::error::Result;
use crate::lti::RationalTF;

/// Parameters of the two-node example: `G_i = c_i/(q - a_i)`,
/// `W_ij = d_i/(q - a_i)`, `T_i = (1 - γ_i)/(q - γ_i)`.
#[derive(Clone, Copy, Debug)]
pub struct TwoNodeParams {
    pub c: [f64; 2],
    pub d: [f64; 2],
    pub a: [f64; 2],
    pub gamma: [f64; 2],
}

impl Default for TwoNodeParams {
    fn default() -> Self {
        TwoNodeParams {
            c: [1.0, 1.0],
            d: [0.1, 0.1],
            a: [0.5, 0.7],
            gamma: [0.6, 0.6],
        }
    }
}

/// Two coupled first-order processes with a decoupled first-order reference.
pub fn two_node(p: &TwoNodeParams) -> Result<NetworkSpec> {
    let graph = Graph::new(2, [(0, 1)])?;
    let mut subs = Vec::new();
    let mut refs = Vec::new();
    for i in 0..2 {
        let j = 1 - i;
        subs.push(SubsystemSpec {
            g: RationalTF::first_order(p.c[i], p.a[i]),
            w: BTreeMap::from([(j, RationalTF::first_order(p.d[i], p.a[i]))]),
            f: BTreeMap::new(),
        });
        refs.push(ReferenceNodeSpec::decoupled(RationalTF::first_order(
            1.0 - p.gamma[i],
            p.gamma[i],
        )));
    }
    NetworkSpec::new(graph, subs, refs)
}

/// Two-node example with a coupled reference model:
/// `Q_ij = q_gain/(q - 0.5)` and constant `P_ij = p_gain`.
pub fn two_node_coupled(p: &TwoNodeParams, q_gain: f64, p_gain: f64) -> Result<NetworkSpec> {
    let base = two_node(p)?;
    let graph = base.graph().clone();
    let subs = (0..2).map(|i| base.subsystem(i).clone()).collect();
    let refs = (0..2)
        .map(|i| {
            let j = 1 - i;
            ReferenceNodeSpec {
                t: base.t(i).clone(),
                q: BTreeMap::from([(j, RationalTF::first_order(q_gain, 0.5))]),
                p: BTreeMap::from([(j, RationalTF::constant(p_gain))]),
            }
        })
        .collect();
    NetworkSpec::new(graph, subs, refs)
}

/// Edges of a `rows × cols` grid (row-major numbering, 4-neighborhood).
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            if c + 1 < cols {
                edges.push((k, k + 1));
            }
            if r + 1 < rows {
                edges.push((k, k + cols));
            }
        }
    }
    edges
}

/// Pole locations `a_i = 0.1 + 0.1 (i - 1)` for the nine-node network.
pub fn nine_node_poles() -> Vec<f64> {
    (0..9).map(|i| 0.1 + 0.1 * i as f64).collect()
}

/// Links absent in the reduced-link controller class of the 3×3 grid (0-based):
/// one outer edge per side, leaving a spanning tree.
pub const NINE_NODE_REDUCED_REMOVED: [(usize, usize); 4] = [(0, 1), (2, 5), (7, 8), (3, 6)];

/// Output-coupled network `G_i = 1/(q - a_i)`, `W_ij = w_gain/(q - a_i)`,
/// decoupled reference `T_i = t_gain/(q - t_pole)`.
pub fn first_order_network(
    poles: &[f64],
    edges: &[(usize, usize)],
    w_gain: f64,
    t_gain: f64,
    t_pole: f64,
) -> Result<NetworkSpec> {
    let graph = Graph::new(poles.len(), edges.iter().copied())?;
    let subs = poles
        .iter()
        .enumerate()
        .map(|(i, &a)| SubsystemSpec {
            g: RationalTF::first_order(1.0, a),
            w: graph
                .neighbors(i)
                .into_iter()
                .map(|j| (j, RationalTF::first_order(w_gain, a)))
                .collect(),
            f: BTreeMap::new(),
        })
        .collect();
    let refs = poles
        .iter()
        .map(|_| ReferenceNodeSpec::decoupled(RationalTF::first_order(t_gain, t_pole)))
        .collect();
    NetworkSpec::new(graph, subs, refs)
}

/// Nine first-order subsystems on a 3×3 grid with `W_ij = 0.1/(q - a_i)` and
/// `T_i = 0.4/(q - 0.6)`.
pub fn nine_node() -> Result<NetworkSpec> {
    first_order_network(&nine_node_poles(), &grid_edges(3, 3), 0.1, 0.4, 0.6)
}
