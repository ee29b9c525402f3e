//! Linear-in-parameters controller classes, regressors built from virtual
//! signals, per-node least-squares identification and excitation
//! diagnostics.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::controller::{ControllerNode, DistributedController};
use crate::ideal::{build_ideal_node, map_to_parameters, reference_rows};
use crate::lti::{filter_slice, Polynomial, RationalTF};
use crate::network::{MultiSignal, NetworkSpec};
use crate::virtual_signals::VirtualData;

/// Relative singular-value threshold for the rank test.
pub const RANK_TOL: f64 = 1e-12;
/// Gram condition number above which excitation is reported as poor.
pub const GRAM_COND_MAX: f64 = 1e10;
/// Smallest admissible eigenvalue of the lagged input covariance.
pub const COV_EIG_MIN: f64 = 1e-6;
/// Tolerance of [`check_minimum_equivalence`].
pub const EQUIVALENCE_TOL: f64 = 1e-7;

/// Controller entry a parameter acts on, for node `i`:
/// `Error` is `C_ii` (input `ē_i`), `Coupling(j)` is `C^W_ij` (input
/// `ō^c_ji`), `Reference(j)` is `C^Q_ij` (input `p̄_ji`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entry {
    Error,
    Coupling(usize),
    Reference(usize),
}

impl Entry {
    pub fn label(&self) -> String {
        match self {
            Entry::Error => "C_ii".into(),
            Entry::Coupling(j) => format!("C_W[{j}]"),
            Entry::Reference(j) => format!("C_Q[{j}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSlot {
    pub entry: Entry,
    pub basis: RationalTF,
}

/// `[C_i(ρ_i)]_entry = Σ_{slots k on entry} ρ_k basis_k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeParametrization {
    slots: Vec<ParamSlot>,
}

impl NodeParametrization {
    pub fn new(slots: Vec<ParamSlot>) -> Result<Self> {
        if let Some(s) = slots.iter().find(|s| !s.basis.is_proper()) {
            return Err(Error::Improper(s.basis.relative_degree()));
        }
        Ok(NodeParametrization { slots })
    }

    pub fn slots(&self) -> &[ParamSlot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn entries(&self) -> Vec<Entry> {
        let mut e: Vec<Entry> = self.slots.iter().map(|s| s.entry).collect();
        e.sort();
        e.dedup();
        e
    }

    /// The entry as a transfer function for parameters `rho`.
    pub fn entry_tf(&self, entry: Entry, rho: &[f64]) -> RationalTF {
        self.slots
            .iter()
            .zip(rho)
            .filter(|(s, _)| s.entry == entry)
            .fold(RationalTF::zero(), |acc, (s, &r)| &acc + &s.basis.scale(r))
    }

    fn entry_eval(&self, entry: Entry, rho: &[f64], z: Complex64) -> Complex64 {
        self.slots
            .iter()
            .zip(rho)
            .filter(|(s, _)| s.entry == entry)
            .map(|(s, &r)| s.basis.eval(z) * r)
            .sum()
    }

    fn without(&self, keep: impl Fn(Entry) -> bool) -> Self {
        NodeParametrization {
            slots: self
                .slots
                .iter()
                .filter(|s| keep(s.entry))
                .cloned()
                .collect(),
        }
    }
}

/// Basis `q^k / den`, `k = deg num, …, 0`, spanning every TF with the
/// denominator of `tf` and a numerator of at most its degree.
fn mirror_basis(tf: &RationalTF) -> Vec<RationalTF> {
    let den = tf.den().clone();
    (0..=tf.num().degree())
        .rev()
        .map(|k| RationalTF::new(Polynomial::monomial(k), den.clone()).expect("nonzero den"))
        .collect()
}

/// Per-node controller classes of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerParametrization {
    pub nodes: Vec<NodeParametrization>,
}

impl ControllerParametrization {
    /// Mirrors the ideal controller of the output-coupled network: one slot
    /// per numerator power of each nonzero ideal entry, over the ideal
    /// denominator. `C^Q_ij` slots are omitted where `P_ji = 0`.
    pub fn full(spec: &NetworkSpec) -> Result<Self> {
        let bar = spec.output_coupled();
        let mut nodes = Vec::with_capacity(spec.nodes());
        for i in 0..spec.nodes() {
            let ideal = build_ideal_node(i, bar.subsystem(i), bar.reference(i))?;
            let mut slots: Vec<ParamSlot> = mirror_basis(&ideal.c_ee)
                .into_iter()
                .map(|basis| ParamSlot {
                    entry: Entry::Error,
                    basis,
                })
                .collect();
            for j in spec.neighbors(i) {
                if let Some(tf) = ideal.c_es.get(&j).filter(|t| !t.is_zero()) {
                    slots.extend(mirror_basis(tf).into_iter().map(|basis| ParamSlot {
                        entry: Entry::Coupling(j),
                        basis,
                    }));
                }
                if spec.p(j, i).is_zero() {
                    continue;
                }
                if let Some(tf) = ideal.c_ek.get(&j).filter(|t| !t.is_zero()) {
                    slots.extend(mirror_basis(tf).into_iter().map(|basis| ParamSlot {
                        entry: Entry::Reference(j),
                        basis,
                    }));
                }
            }
            nodes.push(NodeParametrization::new(slots)?);
        }
        Ok(ControllerParametrization { nodes })
    }

    /// Full class without communication on the undirected links `removed`.
    pub fn reduced(spec: &NetworkSpec, removed: &[(usize, usize)]) -> Result<Self> {
        for &(i, j) in removed {
            if !spec.graph().has_edge(i, j) {
                return Err(Error::Config(format!(
                    "link ({}, {}) is not an edge of the network",
                    spec.id(i),
                    spec.id(j)
                )));
            }
        }
        let cut = |i: usize, j: usize| {
            removed
                .iter()
                .any(|&(a, b)| (a, b) == (i, j) || (b, a) == (i, j))
        };
        let full = ControllerParametrization::full(spec)?;
        Ok(ControllerParametrization {
            nodes: full
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    n.without(|e| match e {
                        Entry::Error => true,
                        Entry::Coupling(j) | Entry::Reference(j) => !cut(i, j),
                    })
                })
                .collect(),
        })
    }

    /// Only the `C_ii` slots of the full class.
    pub fn decentralized(spec: &NetworkSpec) -> Result<Self> {
        let full = ControllerParametrization::full(spec)?;
        Ok(ControllerParametrization {
            nodes: full
                .nodes
                .iter()
                .map(|n| n.without(|e| e == Entry::Error))
                .collect(),
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.nodes.iter().map(NodeParametrization::len).collect()
    }

    /// Distributed controller for parameters `rhos` (one vector per node).
    /// The interconnection rows come from the reference model; rows whose
    /// output no neighbor consumes are dropped.
    pub fn controller(
        &self,
        spec: &NetworkSpec,
        rhos: &[Vec<f64>],
    ) -> Result<DistributedController> {
        if rhos.len() != self.nodes.len() || self.nodes.len() != spec.nodes() {
            return Err(Error::Dimension(
                "one parameter vector per node required".into(),
            ));
        }
        let mut nodes = Vec::with_capacity(spec.nodes());
        for (i, (param, rho)) in self.nodes.iter().zip(rhos).enumerate() {
            if rho.len() != param.len() {
                return Err(Error::Dimension(format!(
                    "node {i}: {} parameters for {} slots",
                    rho.len(),
                    param.len()
                )));
            }
            let mut node: ControllerNode = reference_rows(i, spec)?;
            node.c_ee = param.entry_tf(Entry::Error, rho);
            for e in param.entries() {
                match e {
                    Entry::Error => {}
                    Entry::Coupling(j) => {
                        node.c_es.insert(j, param.entry_tf(e, rho));
                    }
                    Entry::Reference(j) => {
                        node.c_ek.insert(j, param.entry_tf(e, rho));
                    }
                }
            }
            nodes.push(node);
        }
        prune_unused_rows(&mut nodes);
        DistributedController::new(spec.graph().clone(), nodes)
    }

    /// Parameters reproducing the ideal controller of the output-coupled
    /// network, one vector per node.
    pub fn ideal_parameters(&self, spec: &NetworkSpec) -> Result<Vec<Vec<f64>>> {
        let bar = spec.output_coupled();
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let ideal = build_ideal_node(i, bar.subsystem(i), bar.reference(i))?;
                map_to_parameters(&ideal, p)
            })
            .collect()
    }

    pub fn from_json_str(spec: &NetworkSpec, s: &str) -> Result<Self> {
        let file: ParamFile = serde_json::from_str(s)?;
        let index: BTreeMap<u32, usize> = spec
            .ids()
            .iter()
            .enumerate()
            .map(|(k, &id)| (id, k))
            .collect();
        let key = |k: &str| -> Result<usize> {
            k.parse::<u32>()
                .ok()
                .and_then(|id| index.get(&id).copied())
                .ok_or_else(|| Error::Config(format!("bad node id {k:?} in parametrization")))
        };
        let mut nodes = vec![NodeParametrization::default(); spec.nodes()];
        for n in file.nodes {
            let i = key(&n.id.to_string())?;
            let mut slots: Vec<ParamSlot> = n
                .c_ii
                .into_iter()
                .map(|basis| ParamSlot {
                    entry: Entry::Error,
                    basis,
                })
                .collect();
            for (k, list) in n.w {
                let j = key(&k)?;
                slots.extend(list.into_iter().map(|basis| ParamSlot {
                    entry: Entry::Coupling(j),
                    basis,
                }));
            }
            for (k, list) in n.q {
                let j = key(&k)?;
                slots.extend(list.into_iter().map(|basis| ParamSlot {
                    entry: Entry::Reference(j),
                    basis,
                }));
            }
            if slots.iter().any(|s| match s.entry {
                Entry::Coupling(j) | Entry::Reference(j) => !spec.graph().has_edge(i, j),
                Entry::Error => false,
            }) {
                return Err(Error::Config(format!(
                    "node {} parametrized off the graph",
                    n.id
                )));
            }
            nodes[i] = NodeParametrization::new(slots)?;
        }
        Ok(ControllerParametrization { nodes })
    }

    pub fn from_json_file(spec: &NetworkSpec, path: impl AsRef<Path>) -> Result<Self> {
        ControllerParametrization::from_json_str(spec, &std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self, spec: &NetworkSpec) -> Result<String> {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let mut f = ParamNodeFile {
                    id: spec.id(i),
                    c_ii: Vec::new(),
                    w: BTreeMap::new(),
                    q: BTreeMap::new(),
                };
                for s in &n.slots {
                    match s.entry {
                        Entry::Error => f.c_ii.push(s.basis.clone()),
                        Entry::Coupling(j) => {
                            f.w.entry(spec.id(j).to_string())
                                .or_default()
                                .push(s.basis.clone())
                        }
                        Entry::Reference(j) => {
                            f.q.entry(spec.id(j).to_string())
                                .or_default()
                                .push(s.basis.clone())
                        }
                    }
                }
                f
            })
            .collect();
        Ok(serde_json::to_string_pretty(&ParamFile { nodes })?)
    }
}

fn prune_unused_rows(nodes: &mut [ControllerNode]) {
    let l = nodes.len();
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            // o^c_ij feeds C^W_ji; p^c_ij feeds C^Q_ji and the rows of node j.
            if !nodes[j].c_es.contains_key(&i) {
                nodes[i].k_o.remove(&j);
                nodes[i].k_oq.retain(|&(a, _), _| a != j);
            }
            let p_used = nodes[j].c_ek.contains_key(&i)
                || nodes[j].k_oq.keys().any(|&(_, h)| h == i)
                || nodes[j].k_pq.keys().any(|&(_, h)| h == i);
            if !p_used {
                nodes[i].k_p.remove(&j);
                nodes[i].k_pq.retain(|&(a, _), _| a != j);
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ParamFile {
    nodes: Vec<ParamNodeFile>,
}

#[derive(Serialize, Deserialize)]
struct ParamNodeFile {
    id: u32,
    #[serde(rename = "C_ii", default)]
    c_ii: Vec<RationalTF>,
    #[serde(rename = "W", default, skip_serializing_if = "BTreeMap::is_empty")]
    w: BTreeMap<String, Vec<RationalTF>>,
    #[serde(rename = "Q", default, skip_serializing_if = "BTreeMap::is_empty")]
    q: BTreeMap<String, Vec<RationalTF>>,
}

/// Regression problem `u_i ≈ Φ_i ρ_i` of one node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRegressors {
    pub node: usize,
    pub phi: DMatrix<f64>,
    pub target: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressorSet {
    pub nodes: Vec<NodeRegressors>,
}

/// Default transient trim: the largest basis denominator degree.
pub fn default_trim(param: &ControllerParametrization) -> usize {
    param
        .nodes
        .iter()
        .flat_map(|n| n.slots.iter())
        .map(|s| s.basis.den().degree())
        .max()
        .unwrap_or(0)
}

/// Filters each basis function against its virtual signal and drops the
/// first `trim` samples.
pub fn build_regressors(
    param: &ControllerParametrization,
    vd: &VirtualData,
    u: &MultiSignal,
    trim: usize,
) -> Result<RegressorSet> {
    let l = param.nodes.len();
    if vd.e_bar.len() != l || u.len() != l {
        return Err(Error::Dimension(format!(
            "{l} parametrized nodes, {} virtual errors, {} inputs",
            vd.e_bar.len(),
            u.len()
        )));
    }
    let n = vd.horizon_used;
    if u.horizon() < n {
        return Err(Error::Dimension(format!(
            "input horizon {} shorter than virtual horizon {n}",
            u.horizon()
        )));
    }
    if trim >= n {
        return Err(Error::HorizonTooShort {
            needed: trim,
            got: n,
        });
    }
    let rows = n - trim;
    let mut nodes = Vec::with_capacity(l);
    for (i, p) in param.nodes.iter().enumerate() {
        let mut phi = DMatrix::<f64>::zeros(rows, p.len());
        for (c, slot) in p.slots.iter().enumerate() {
            let signal = match slot.entry {
                Entry::Error => vd.e_bar.channel(i),
                Entry::Coupling(j) => vd.o_bar.get(&(j, i)).ok_or_else(|| {
                    Error::Dimension(format!("no virtual interconnection signal on ({j}, {i})"))
                })?,
                Entry::Reference(j) => vd.p_bar.get(&(j, i)).ok_or_else(|| {
                    Error::Dimension(format!("no virtual reference signal on ({j}, {i})"))
                })?,
            };
            let col = filter_slice(&slot.basis, &signal.samples[..n])?;
            for (r, v) in col[trim..].iter().enumerate() {
                phi[(r, c)] = *v;
            }
        }
        let target = DVector::from_column_slice(&u.channel(i).samples[trim..n]);
        nodes.push(NodeRegressors {
            node: i,
            phi,
            target,
        });
    }
    Ok(RegressorSet { nodes })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentificationResult {
    pub rho: Vec<f64>,
    /// `Σ_t (u_i(t) - û_i(t, ρ*))²`
    pub j_bar: f64,
    /// Condition number of `Φᵀ Φ`.
    pub gram_cond: f64,
    pub residual_norm: f64,
}

/// Least-squares minimizer of `‖u_i - Φ_i ρ‖²` by Householder QR, after an
/// SVD rank test.
pub fn identify_node(reg: &NodeRegressors) -> Result<IdentificationResult> {
    let cols = reg.phi.ncols();
    if cols == 0 {
        let r = reg.target.norm();
        return Ok(IdentificationResult {
            rho: Vec::new(),
            j_bar: r * r,
            gram_cond: 1.0,
            residual_norm: r,
        });
    }
    if reg.phi.nrows() < cols {
        return Err(Error::RankDeficient {
            node: reg.node,
            rank: reg.phi.nrows(),
            cols,
        });
    }
    let sv = reg.phi.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let rank = sv
        .iter()
        .filter(|&&s| s > RANK_TOL * smax && s > 0.0)
        .count();
    if rank < cols {
        return Err(Error::RankDeficient {
            node: reg.node,
            rank,
            cols,
        });
    }
    let qr = reg.phi.clone().qr();
    let qtb = qr.q().transpose() * &reg.target;
    let rho = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Singular(format!("triangular factor of node {}", reg.node)))?;
    let residual = &reg.target - &reg.phi * &rho;
    let rn = residual.norm();
    Ok(IdentificationResult {
        rho: rho.iter().copied().collect(),
        j_bar: rn * rn,
        gram_cond: (smax / smin).powi(2),
        residual_norm: rn,
    })
}

/// Identifies every node independently.
pub fn identify_all(reg: &RegressorSet) -> Result<Vec<IdentificationResult>> {
    reg.nodes.iter().map(identify_node).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcitationReport {
    /// Smallest eigenvalue of the sample covariance of `[u(t); …; u(t-lags)]`.
    pub min_cov_eig: f64,
    pub gram_cond: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ExcitationReport {
    pub fn is_sufficient(&self) -> bool {
        self.warnings.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationThresholds {
    pub cov_eig_min: f64,
    pub gram_cond_max: f64,
    pub lags: usize,
}

impl Default for ExcitationThresholds {
    fn default() -> Self {
        ExcitationThresholds {
            cov_eig_min: COV_EIG_MIN,
            gram_cond_max: GRAM_COND_MAX,
            lags: 2,
        }
    }
}

/// Finite-sample excitation diagnostics of the input data and, if given,
/// of the regressors, with the default thresholds.
pub fn excitation_check(
    u: &MultiSignal,
    reg: Option<&RegressorSet>,
    lags: usize,
) -> ExcitationReport {
    excitation_check_with(
        u,
        reg,
        &ExcitationThresholds {
            lags,
            ..ExcitationThresholds::default()
        },
    )
}

pub fn excitation_check_with(
    u: &MultiSignal,
    reg: Option<&RegressorSet>,
    th: &ExcitationThresholds,
) -> ExcitationReport {
    let lags = th.lags;
    let l = u.len();
    let n = u.horizon();
    let dim = l * (lags + 1);
    let mut warnings = Vec::new();
    let min_cov_eig = if n > lags && dim > 0 {
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        let mut phi = DVector::<f64>::zeros(dim);
        for t in lags..n {
            for k in 0..=lags {
                for c in 0..l {
                    phi[k * l + c] = u.channel(c).samples[t - k];
                }
            }
            cov.ger(1.0, &phi, &phi, 1.0);
        }
        cov /= (n - lags) as f64;
        SymmetricEigen::new(cov).eigenvalues.min()
    } else {
        0.0
    };
    if min_cov_eig < th.cov_eig_min {
        warnings.push(format!(
            "input covariance over {lags} lags is near singular (smallest eigenvalue {min_cov_eig:e})"
        ));
    }
    let mut gram_cond = Vec::new();
    if let Some(reg) = reg {
        for r in &reg.nodes {
            if r.phi.ncols() == 0 {
                gram_cond.push(1.0);
                continue;
            }
            let sv = r.phi.singular_values();
            let c = if sv.min() > 0.0 {
                (sv.max() / sv.min()).powi(2)
            } else {
                f64::INFINITY
            };
            if c > th.gram_cond_max {
                warnings.push(format!("node {}: Gram condition number {c:e}", r.node));
            }
            gram_cond.push(c);
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    ExcitationReport {
        min_cov_eig,
        gram_cond,
        warnings,
    }
}

/// Whether `ρ*` and `ρ_d` give the same closed loop: equal `C_ii`, and
/// `ΔC^W_ij + ΔC^Q_ij P_ji = 0` on every directed edge, on `grid`.
/// Returns the verdict and the largest deviation.
pub fn check_minimum_equivalence(
    rho_star: &[Vec<f64>],
    rho_d: &[Vec<f64>],
    param: &ControllerParametrization,
    spec: &NetworkSpec,
    grid: &[f64],
) -> Result<(bool, f64)> {
    if rho_star.len() != param.nodes.len() || rho_d.len() != param.nodes.len() {
        return Err(Error::Dimension(
            "one parameter vector per node required".into(),
        ));
    }
    let mut worst = 0.0_f64;
    for (i, p) in param.nodes.iter().enumerate() {
        let delta: Vec<f64> = rho_star[i]
            .iter()
            .zip(&rho_d[i])
            .map(|(a, b)| a - b)
            .collect();
        if delta.len() != p.len() {
            return Err(Error::Dimension(format!(
                "node {i}: parameter length mismatch"
            )));
        }
        for &w in grid {
            let z = Complex64::from_polar(1.0, w);
            worst = worst.max(p.entry_eval(Entry::Error, &delta, z).norm());
            for j in spec.neighbors(i) {
                let dw = p.entry_eval(Entry::Coupling(j), &delta, z);
                let dq = p.entry_eval(Entry::Reference(j), &delta, z);
                worst = worst.max((dw + dq * spec.p(j, i).eval(z)).norm());
            }
        }
    }
    Ok((worst <= EQUIVALENCE_TOL, worst))
}
