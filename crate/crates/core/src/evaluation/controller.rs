//! Distributed controller representation and its JSON form.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::RationalTF;
use crate::network::{Graph, NetworkSpec};

/// One local controller:
///
/// ```text
/// u_i    = c_ee e_i + Σ_j c_es[j] s^c_ij + Σ_j c_ek[j] k^c_ij
/// o^c_ij = k_o[j] e_i + Σ_h k_oq[(j,h)] k^c_ih
/// p^c_ij = k_p[j] e_i + Σ_h k_pq[(j,h)] k^c_ih
/// ```
///
/// with the pairing `s^c_ij = o^c_ji`, `k^c_ij = p^c_ji` on every edge.
/// Missing map entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerNode {
    pub c_ee: RationalTF,
    pub c_es: BTreeMap<usize, RationalTF>,
    pub c_ek: BTreeMap<usize, RationalTF>,
    pub k_o: BTreeMap<usize, RationalTF>,
    pub k_oq: BTreeMap<(usize, usize), RationalTF>,
    pub k_p: BTreeMap<usize, RationalTF>,
    pub k_pq: BTreeMap<(usize, usize), RationalTF>,
}

impl ControllerNode {
    pub fn zero() -> Self {
        ControllerNode {
            c_ee: RationalTF::zero(),
            c_es: BTreeMap::new(),
            c_ek: BTreeMap::new(),
            k_o: BTreeMap::new(),
            k_oq: BTreeMap::new(),
            k_p: BTreeMap::new(),
            k_pq: BTreeMap::new(),
        }
    }

    /// Every entry with a label, in a fixed order; neighbors are labelled
    /// by their index.
    pub fn entries(&self) -> Vec<(String, &RationalTF)> {
        self.entries_named(|j| j.to_string())
    }

    /// As [`entries`](Self::entries) with neighbor `j` labelled `name(j)`.
    pub fn entries_named(&self, name: impl Fn(usize) -> String) -> Vec<(String, &RationalTF)> {
        let mut out = vec![("C_ee".to_string(), &self.c_ee)];
        out.extend(
            self.c_es
                .iter()
                .map(|(&j, tf)| (format!("C_es[{}]", name(j)), tf)),
        );
        out.extend(
            self.c_ek
                .iter()
                .map(|(&j, tf)| (format!("C_ek[{}]", name(j)), tf)),
        );
        out.extend(
            self.k_o
                .iter()
                .map(|(&j, tf)| (format!("K_o[{}]", name(j)), tf)),
        );
        out.extend(
            self.k_oq
                .iter()
                .map(|(&(j, h), tf)| (format!("K_oQ[{},{}]", name(j), name(h)), tf)),
        );
        out.extend(
            self.k_p
                .iter()
                .map(|(&j, tf)| (format!("K_p[{}]", name(j)), tf)),
        );
        out.extend(
            self.k_pq
                .iter()
                .map(|(&(j, h), tf)| (format!("K_pQ[{},{}]", name(j), name(h)), tf)),
        );
        out
    }
}

/// Local controllers on the plant graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributedController {
    pub graph: Graph,
    pub nodes: Vec<ControllerNode>,
}

impl DistributedController {
    pub fn new(graph: Graph, nodes: Vec<ControllerNode>) -> Result<Self> {
        if nodes.len() != graph.nodes() {
            return Err(Error::Dimension(format!(
                "{} controller nodes on a {}-node graph",
                nodes.len(),
                graph.nodes()
            )));
        }
        for (i, n) in nodes.iter().enumerate() {
            let ok = n
                .c_es
                .keys()
                .chain(n.c_ek.keys())
                .chain(n.k_o.keys())
                .chain(n.k_p.keys())
                .chain(n.k_oq.keys().flat_map(|(j, h)| [j, h]))
                .chain(n.k_pq.keys().flat_map(|(j, h)| [j, h]))
                .all(|&j| graph.has_edge(i, j));
            if !ok {
                return Err(Error::InvalidNetwork(format!(
                    "controller {i} communicates outside the plant edges"
                )));
            }
        }
        Ok(DistributedController { graph, nodes })
    }

    /// Controller with `u = 0`.
    pub fn zero(graph: Graph) -> Self {
        let l = graph.nodes();
        DistributedController {
            graph,
            nodes: vec![ControllerNode::zero(); l],
        }
    }

    pub fn to_json_string(
        &self,
        spec: &NetworkSpec,
        extra: Option<serde_json::Value>,
    ) -> Result<String> {
        let file = ControllerFile {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| NodeFile::from_node(spec, i, n))
                .collect(),
            diagnostics: extra,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json_str(spec: &NetworkSpec, s: &str) -> Result<Self> {
        let file: ControllerFile = serde_json::from_str(s)?;
        let index: BTreeMap<u32, usize> = spec
            .ids()
            .iter()
            .enumerate()
            .map(|(k, &id)| (id, k))
            .collect();
        let mut nodes = vec![ControllerNode::zero(); spec.nodes()];
        for n in file.nodes {
            let i = *index
                .get(&n.id)
                .ok_or_else(|| Error::InvalidNetwork(format!("unknown node id {}", n.id)))?;
            nodes[i] = n.into_node(&index)?;
        }
        DistributedController::new(spec.graph().clone(), nodes)
    }

    pub fn from_json_file(spec: &NetworkSpec, path: impl AsRef<Path>) -> Result<Self> {
        DistributedController::from_json_str(spec, &std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ControllerFile {
    nodes: Vec<NodeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostics: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    id: u32,
    #[serde(rename = "C_ee")]
    c_ee: RationalTF,
    #[serde(rename = "C_es", default, skip_serializing_if = "BTreeMap::is_empty")]
    c_es: BTreeMap<String, RationalTF>,
    #[serde(rename = "C_ek", default, skip_serializing_if = "BTreeMap::is_empty")]
    c_ek: BTreeMap<String, RationalTF>,
    #[serde(rename = "K_o", default, skip_serializing_if = "BTreeMap::is_empty")]
    k_o: BTreeMap<String, RationalTF>,
    #[serde(rename = "K_oQ", default, skip_serializing_if = "BTreeMap::is_empty")]
    k_oq: BTreeMap<String, BTreeMap<String, RationalTF>>,
    #[serde(rename = "K_p", default, skip_serializing_if = "BTreeMap::is_empty")]
    k_p: BTreeMap<String, RationalTF>,
    #[serde(rename = "K_pQ", default, skip_serializing_if = "BTreeMap::is_empty")]
    k_pq: BTreeMap<String, BTreeMap<String, RationalTF>>,
}

impl NodeFile {
    fn from_node(spec: &NetworkSpec, i: usize, n: &ControllerNode) -> Self {
        let one = |m: &BTreeMap<usize, RationalTF>| {
            m.iter()
                .filter(|(_, tf)| !tf.is_zero())
                .map(|(&j, tf)| (spec.id(j).to_string(), tf.clone()))
                .collect::<BTreeMap<_, _>>()
        };
        let two = |m: &BTreeMap<(usize, usize), RationalTF>| {
            let mut out: BTreeMap<String, BTreeMap<String, RationalTF>> = BTreeMap::new();
            for (&(j, h), tf) in m.iter().filter(|(_, tf)| !tf.is_zero()) {
                out.entry(spec.id(j).to_string())
                    .or_default()
                    .insert(spec.id(h).to_string(), tf.clone());
            }
            out
        };
        NodeFile {
            id: spec.id(i),
            c_ee: n.c_ee.clone(),
            c_es: one(&n.c_es),
            c_ek: one(&n.c_ek),
            k_o: one(&n.k_o),
            k_oq: two(&n.k_oq),
            k_p: one(&n.k_p),
            k_pq: two(&n.k_pq),
        }
    }

    fn into_node(self, index: &BTreeMap<u32, usize>) -> Result<ControllerNode> {
        let key = |k: &str| -> Result<usize> {
            k.parse::<u32>()
                .ok()
                .and_then(|id| index.get(&id).copied())
                .ok_or_else(|| Error::InvalidNetwork(format!("bad neighbor key {k:?}")))
        };
        let one = |m: BTreeMap<String, RationalTF>| -> Result<BTreeMap<usize, RationalTF>> {
            m.into_iter().map(|(k, tf)| Ok((key(&k)?, tf))).collect()
        };
        let two = |m: BTreeMap<String, BTreeMap<String, RationalTF>>| -> Result<BTreeMap<(usize, usize), RationalTF>> {
            let mut out = BTreeMap::new();
            for (j, inner) in m {
                let j = key(&j)?;
                for (h, tf) in inner {
                    out.insert((j, key(&h)?), tf);
                }
            }
            Ok(out)
        };
        Ok(ControllerNode {
            c_ee: self.c_ee,
            c_es: one(self.c_es)?,
            c_ek: one(self.c_ek)?,
            k_o: one(self.k_o)?,
            k_oq: two(self.k_oq)?,
            k_p: one(self.k_p)?,
            k_pq: two(self.k_pq)?,
        })
    }
}
