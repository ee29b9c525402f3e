use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{RationalTF, Signal};

/// Undirected graph on nodes `0..nodes` without self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    nodes: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidNetwork(format!("self-loop at node {i}")));
            }
            if i >= nodes || j >= nodes {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({i}, {j}) outside 0..{nodes}"
                )));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Graph { nodes, edges: set })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Unordered edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Sorted neighbor set `N_i`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        n.sort_unstable();
        n
    }

    /// Ordered pairs `(i, j)` with `j ∈ N_i`, sorted.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let mut d: Vec<_> = self
            .edges
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .collect();
        d.sort_unstable();
        d
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes == 0 {
            return true;
        }
        let mut seen = vec![false; self.nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Plant node: `y_i = G_i u_i + Σ_j W_ij s_ij`, `o_ij = F_ij y_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsystemSpec {
    pub g: RationalTF,
    pub w: BTreeMap<usize, RationalTF>,
    pub f: BTreeMap<usize, RationalTF>,
}

/// Reference-model node: `y_i^d = T_i r_i + Σ_j Q_ij k_ij`, `p_ij = P_ij y_i^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceNodeSpec {
    pub t: RationalTF,
    pub q: BTreeMap<usize, RationalTF>,
    pub p: BTreeMap<usize, RationalTF>,
}

impl ReferenceNodeSpec {
    pub fn decoupled(t: RationalTF) -> Self {
        ReferenceNodeSpec {
            t,
            q: BTreeMap::new(),
            p: BTreeMap::new(),
        }
    }

    pub fn is_decoupled(&self) -> bool {
        self.q
            .values()
            .chain(self.p.values())
            .all(RationalTF::is_zero)
    }
}

/// Interconnected plant plus structured reference model on one graph.
///
/// After construction every `W_ij`, `F_ij`, `Q_ij`, `P_ij` is present for
/// exactly the neighbors `j ∈ N_i` (defaults `F = 1`, `Q = P = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    graph: Graph,
    ids: Vec<u32>,
    subsystems: Vec<SubsystemSpec>,
    reference: Vec<ReferenceNodeSpec>,
}

impl NetworkSpec {
    pub fn new(
        graph: Graph,
        mut subsystems: Vec<SubsystemSpec>,
        mut reference: Vec<ReferenceNodeSpec>,
    ) -> Result<Self> {
        let l = graph.nodes();
        if subsystems.len() != l || reference.len() != l {
            return Err(Error::InvalidNetwork(format!(
                "{l} nodes but {} subsystems and {} reference nodes",
                subsystems.len(),
                reference.len()
            )));
        }
        for i in 0..l {
            let nbrs: BTreeSet<usize> = graph.neighbors(i).into_iter().collect();
            let sub = &mut subsystems[i];
            let refn = &mut reference[i];
            let keys: BTreeSet<usize> = sub.w.keys().copied().collect();
            if keys != nbrs {
                return Err(Error::InvalidNetwork(format!(
                    "node {i}: W entries {keys:?} do not match neighbors {nbrs:?}"
                )));
            }
            for (name, map) in [("F", &sub.f), ("Q", &refn.q), ("P", &refn.p)] {
                if let Some(j) = map.keys().find(|j| !nbrs.contains(j)) {
                    return Err(Error::InvalidNetwork(format!(
                        "node {i}: {name}_{i}{j} defined but ({i}, {j}) is not an edge"
                    )));
                }
            }
            for &j in &nbrs {
                sub.f.entry(j).or_insert_with(RationalTF::one);
                refn.q.entry(j).or_insert_with(RationalTF::zero);
                refn.p.entry(j).or_insert_with(RationalTF::zero);
            }
        }
        Ok(NetworkSpec {
            ids: (1..=l as u32).collect(),
            graph,
            subsystems,
            reference,
        })
    }

    pub fn with_ids(mut self, ids: Vec<u32>) -> Result<Self> {
        if ids.len() != self.nodes() || ids.iter().collect::<BTreeSet<_>>().len() != ids.len() {
            return Err(Error::InvalidNetwork(
                "node ids must be unique, one per node".into(),
            ));
        }
        self.ids = ids;
        Ok(self)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn nodes(&self) -> usize {
        self.graph.nodes()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> u32 {
        self.ids[i]
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.graph.neighbors(i)
    }

    pub fn subsystem(&self, i: usize) -> &SubsystemSpec {
        &self.subsystems[i]
    }

    pub fn reference(&self, i: usize) -> &ReferenceNodeSpec {
        &self.reference[i]
    }

    pub fn g(&self, i: usize) -> &RationalTF {
        &self.subsystems[i].g
    }

    pub fn w(&self, i: usize, j: usize) -> &RationalTF {
        &self.subsystems[i].w[&j]
    }

    pub fn f(&self, i: usize, j: usize) -> &RationalTF {
        &self.subsystems[i].f[&j]
    }

    pub fn t(&self, i: usize) -> &RationalTF {
        &self.reference[i].t
    }

    pub fn q(&self, i: usize, j: usize) -> &RationalTF {
        &self.reference[i].q[&j]
    }

    pub fn p(&self, i: usize, j: usize) -> &RationalTF {
        &self.reference[i].p[&j]
    }

    pub fn is_decoupled_reference(&self) -> bool {
        self.reference.iter().all(ReferenceNodeSpec::is_decoupled)
    }

    pub fn has_unit_output_maps(&self) -> bool {
        self.subsystems
            .iter()
            .all(|s| s.f.values().all(|f| f.is_constant(1.0, 0.0)))
    }

    /// Equivalent output-coupled network: `W̄_ij = W_ij F_ji`, `F = 1`.
    /// The transfer `u → y` is unchanged.
    pub fn output_coupled(&self) -> NetworkSpec {
        let mut subs = self.subsystems.clone();
        for (i, sub) in subs.iter_mut().enumerate() {
            for (&j, w) in sub.w.iter_mut() {
                *w = &*w * self.f(j, i);
            }
            for f in sub.f.values_mut() {
                *f = RationalTF::one();
            }
        }
        NetworkSpec {
            graph: self.graph.clone(),
            ids: self.ids.clone(),
            subsystems: subs,
            reference: self.reference.clone(),
        }
    }

    /// Relabels nodes: old node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<NetworkSpec> {
        let l = self.nodes();
        let mut inv = vec![usize::MAX; l];
        for (i, &p) in perm.iter().enumerate() {
            if p >= l || inv[p] != usize::MAX {
                return Err(Error::InvalidNetwork("not a permutation".into()));
            }
            inv[p] = i;
        }
        let remap = |m: &BTreeMap<usize, RationalTF>| -> BTreeMap<usize, RationalTF> {
            m.iter().map(|(&j, tf)| (perm[j], tf.clone())).collect()
        };
        let graph = Graph::new(l, self.graph.edges().map(|(a, b)| (perm[a], perm[b])))?;
        let subs = (0..l)
            .map(|k| {
                let s = &self.subsystems[inv[k]];
                SubsystemSpec {
                    g: s.g.clone(),
                    w: remap(&s.w),
                    f: remap(&s.f),
                }
            })
            .collect();
        let refs = (0..l)
            .map(|k| {
                let r = &self.reference[inv[k]];
                ReferenceNodeSpec {
                    t: r.t.clone(),
                    q: remap(&r.q),
                    p: remap(&r.p),
                }
            })
            .collect();
        NetworkSpec::new(graph, subs, refs)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(s)?;
        file.into_spec()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        NetworkSpec::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetworkFile::from_spec(self))?)
    }
}

/// Per-node (or per-directed-edge) signals sharing one horizon and start.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSignal {
    channels: Vec<Signal>,
}

impl MultiSignal {
    pub fn new(channels: Vec<Signal>) -> Result<Self> {
        if let Some(first) = channels.first() {
            if channels
                .iter()
                .any(|c| c.len() != first.len() || c.start != first.start)
            {
                return Err(Error::Dimension(
                    "channels must share horizon and start index".into(),
                ));
            }
        }
        Ok(MultiSignal { channels })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        MultiSignal::new(rows.into_iter().map(Signal::new).collect())
    }

    pub fn zeros(channels: usize, horizon: usize) -> Self {
        MultiSignal {
            channels: vec![Signal::zeros(horizon); channels],
        }
    }

    pub fn channels(&self) -> &[Signal] {
        &self.channels
    }

    pub fn channel(&self, i: usize) -> &Signal {
        &self.channels[i]
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.channels.first().map_or(0, Signal::len)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.channels.iter().map(|c| c.samples.clone()).collect()
    }

    pub fn truncated(&self, n: usize) -> MultiSignal {
        MultiSignal {
            channels: self.channels.iter().map(|c| c.truncated(n)).collect(),
        }
    }

    pub fn add(&self, other: &MultiSignal) -> Result<MultiSignal> {
        if self.len() != other.len() || self.horizon() != other.horizon() {
            return Err(Error::Dimension(
                "cannot add signals of different shape".into(),
            ));
        }
        MultiSignal::new(
            self.channels
                .iter()
                .zip(&other.channels)
                .map(|(a, b)| {
                    Signal::with_start(
                        a.samples
                            .iter()
                            .zip(&b.samples)
                            .map(|(x, y)| x + y)
                            .collect(),
                        a.start,
                    )
                })
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.channels.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }
}

/// Signals per directed edge `(i, j)`, `j ∈ N_i`.
pub type EdgeSignals = BTreeMap<(usize, usize), Signal>;

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<NodeFile>,
    #[serde(default)]
    edges: Vec<[u32; 2]>,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    id: u32,
    #[serde(rename = "G")]
    g: RationalTF,
    #[serde(rename = "W", default)]
    w: BTreeMap<String, RationalTF>,
    #[serde(rename = "F", default, skip_serializing_if = "BTreeMap::is_empty")]
    f: BTreeMap<String, RationalTF>,
    #[serde(rename = "T")]
    t: RationalTF,
    #[serde(rename = "Q", default, skip_serializing_if = "BTreeMap::is_empty")]
    q: BTreeMap<String, RationalTF>,
    #[serde(rename = "P", default, skip_serializing_if = "BTreeMap::is_empty")]
    p: BTreeMap<String, RationalTF>,
}

impl NetworkFile {
    fn into_spec(self) -> Result<NetworkSpec> {
        let ids: Vec<u32> = self.nodes.iter().map(|n| n.id).collect();
        let index: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        if index.len() != ids.len() {
            return Err(Error::InvalidNetwork("duplicate node id".into()));
        }
        let lookup = |id: u32| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| Error::InvalidNetwork(format!("unknown node id {id}")))
        };
        let convert = |m: BTreeMap<String, RationalTF>| -> Result<BTreeMap<usize, RationalTF>> {
            m.into_iter()
                .map(|(k, tf)| {
                    let id: u32 = k
                        .parse()
                        .map_err(|_| Error::InvalidNetwork(format!("bad neighbor key {k:?}")))?;
                    Ok((lookup(id)?, tf))
                })
                .collect()
        };
        let edges = self
            .edges
            .iter()
            .map(|[a, b]| Ok((lookup(*a)?, lookup(*b)?)))
            .collect::<Result<Vec<_>>>()?;
        let graph = Graph::new(ids.len(), edges)?;
        let mut subs = Vec::new();
        let mut refs = Vec::new();
        for n in self.nodes {
            subs.push(SubsystemSpec {
                g: n.g,
                w: convert(n.w)?,
                f: convert(n.f)?,
            });
            refs.push(ReferenceNodeSpec {
                t: n.t,
                q: convert(n.q)?,
                p: convert(n.p)?,
            });
        }
        NetworkSpec::new(graph, subs, refs)?.with_ids(ids)
    }

    fn from_spec(spec: &NetworkSpec) -> Self {
        let keyed = |m: &BTreeMap<usize, RationalTF>, skip: &dyn Fn(&RationalTF) -> bool| {
            m.iter()
                .filter(|(_, tf)| !skip(tf))
                .map(|(&j, tf)| (spec.id(j).to_string(), tf.clone()))
                .collect::<BTreeMap<_, _>>()
        };
        let is_one = |tf: &RationalTF| tf.is_constant(1.0, 0.0);
        let is_zero = |tf: &RationalTF| tf.is_zero();
        let never = |_: &RationalTF| false;
        NetworkFile {
            nodes: (0..spec.nodes())
                .map(|i| NodeFile {
                    id: spec.id(i),
                    g: spec.g(i).clone(),
                    w: keyed(&spec.subsystems[i].w, &never),
                    f: keyed(&spec.subsystems[i].f, &is_one),
                    t: spec.t(i).clone(),
                    q: keyed(&spec.reference[i].q, &is_zero),
                    p: keyed(&spec.reference[i].p, &is_zero),
                })
                .collect(),
            edges: spec
                .graph
                .edges()
                .map(|(a, b)| [spec.id(a), spec.id(b)])
                .collect(),
        }
    }
}
