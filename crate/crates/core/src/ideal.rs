//! The ideal distributed controller: local controllers that make the
//! closed-loop network reproduce the structured reference model exactly,
//! together with stability/causality checks and the mapping onto a linear
//! controller parametrization.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::controller::{ControllerNode, DistributedController};
use crate::identification::{Entry, NodeParametrization};
use crate::lti::{Polynomial, RationalTF, DEFAULT_CANCEL_TOL};
use crate::network::{NetworkSpec, ReferenceNodeSpec, SubsystemSpec};

/// Ideal local controller; same layout as any [`ControllerNode`].
pub type IdealControllerNode = ControllerNode;

/// Tolerance on root locations for the stability conditions.
pub const ROOT_TOL: f64 = 1e-7;

/// Coefficient residual above which an entry is not representable.
pub const REPRESENTABLE_TOL: f64 = 1e-8;

/// Builds the ideal local controller of node `node`.
///
/// ```text
/// u_i    = T/(G(1-T)) e_i - Σ_j W_ij/G s^c_ij + Σ_j Q_ij/(G(1-T)) k^c_ij
/// o^c_ij = T F_ij/(1-T) e_i + Σ_h F_ij Q_ih/(1-T) k^c_ih
/// p^c_ij = T P_ij/(1-T) e_i + Σ_h P_ij Q_ih/(1-T) k^c_ih
/// ```
pub fn build_ideal_node(
    node: usize,
    sub: &SubsystemSpec,
    refn: &ReferenceNodeSpec,
) -> Result<IdealControllerNode> {
    let tol = DEFAULT_CANCEL_TOL;
    if sub.g.is_zero() {
        return Err(Error::ZeroPlant { node });
    }
    let omt = &RationalTF::one() - &refn.t;
    if omt.is_zero() {
        return Err(Error::UnitReference { node });
    }
    let inv_omt = omt.recip()?;
    let g_omt = sub.g.mul_tol(&omt, tol);
    let t_omt = refn.t.mul_tol(&inv_omt, tol);

    let c_ee = refn.t.div_tol(&g_omt, tol)?;
    let c_es = sub
        .w
        .iter()
        .map(|(&j, w)| Ok((j, (-w).div_tol(&sub.g, tol)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let c_ek = refn
        .q
        .iter()
        .map(|(&j, q)| Ok((j, q.div_tol(&g_omt, tol)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;

    let f_of = |j: usize| sub.f.get(&j).cloned().unwrap_or_else(RationalTF::one);
    let neighbors: Vec<usize> = sub.w.keys().copied().collect();
    let (k_o, k_oq) = output_rows(&neighbors, &t_omt, &inv_omt, &refn.q, f_of);
    let (k_p, k_pq) = output_rows(&neighbors, &t_omt, &inv_omt, &refn.q, |j| {
        refn.p.get(&j).cloned().unwrap_or_else(RationalTF::zero)
    });
    Ok(ControllerNode {
        c_ee,
        c_es,
        c_ek,
        k_o,
        k_oq,
        k_p,
        k_pq,
    })
}

type Rows = (
    BTreeMap<usize, RationalTF>,
    BTreeMap<(usize, usize), RationalTF>,
);

/// Rows `X_ij T/(1-T)` and `X_ij Q_ih/(1-T)` for an output map `X`.
fn output_rows(
    neighbors: &[usize],
    t_omt: &RationalTF,
    inv_omt: &RationalTF,
    q: &BTreeMap<usize, RationalTF>,
    x_of: impl Fn(usize) -> RationalTF,
) -> Rows {
    let mut e_row = BTreeMap::new();
    let mut k_row = BTreeMap::new();
    for &j in neighbors {
        let x = x_of(j);
        e_row.insert(j, t_omt * &x);
        let x_omt = &x * inv_omt;
        for &h in neighbors {
            let qh = q.get(&h).cloned().unwrap_or_else(RationalTF::zero);
            let entry = &x_omt * &qh;
            if !entry.is_zero() {
                k_row.insert((j, h), entry);
            }
        }
    }
    (e_row, k_row)
}

/// Interconnection rows of a local controller that depend on the reference
/// model only (output maps `F = 1`). Data-driven controllers reuse these.
pub fn reference_rows(node: usize, spec: &NetworkSpec) -> Result<ControllerNode> {
    let refn = spec.reference(node);
    let omt = &RationalTF::one() - &refn.t;
    if omt.is_zero() {
        return Err(Error::UnitReference { node });
    }
    let inv_omt = omt.recip()?;
    let t_omt = &refn.t * &inv_omt;
    let neighbors = spec.neighbors(node);
    let (k_o, k_oq) = output_rows(&neighbors, &t_omt, &inv_omt, &refn.q, |_| RationalTF::one());
    let (k_p, k_pq) = output_rows(&neighbors, &t_omt, &inv_omt, &refn.q, |j| {
        refn.p.get(&j).cloned().unwrap_or_else(RationalTF::zero)
    });
    Ok(ControllerNode {
        k_o,
        k_oq,
        k_p,
        k_pq,
        ..ControllerNode::zero()
    })
}

/// Ideal local controllers for every node.
pub fn build_ideal_controller(spec: &NetworkSpec) -> Result<DistributedController> {
    let nodes = (0..spec.nodes())
        .map(|i| build_ideal_node(i, spec.subsystem(i), spec.reference(i)))
        .collect::<Result<Vec<_>>>()?;
    DistributedController::new(spec.graph().clone(), nodes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootViolation {
    pub node: usize,
    /// Transfer function that lacks the required root.
    pub entry: String,
    pub root: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CausalityViolation {
    pub node: usize,
    pub entry: String,
    pub relative_degree: i64,
}

/// Stability and causality conditions for the ideal controller. Empty lists
/// mean the ideal controller is stable and causal.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RealizabilityReport {
    /// Non-minimum-phase zeros of `G_i` missing from `T_i`, `W_ij` or `Q_ij`.
    pub nmp_zero_violations: Vec<RootViolation>,
    /// Unstable poles of `W_ij` that are not poles of `G_i`.
    pub unstable_w_pole_violations: Vec<RootViolation>,
    /// Unstable poles of `F_ij` that are not zeros of `T_i`.
    pub unstable_f_pole_violations: Vec<RootViolation>,
    pub causality_violations: Vec<CausalityViolation>,
}

impl RealizabilityReport {
    pub fn is_realizable(&self) -> bool {
        self.nmp_zero_violations.is_empty()
            && self.unstable_w_pole_violations.is_empty()
            && self.unstable_f_pole_violations.is_empty()
            && self.causality_violations.is_empty()
    }
}

fn unstable(z: &Complex64) -> bool {
    z.norm() >= 1.0 - ROOT_TOL
}

fn has_root(roots: &[Complex64], z: Complex64) -> bool {
    roots.iter().any(|r| (r - z).norm() <= ROOT_TOL)
}

/// Checks the pole/zero and relative-degree conditions for every node.
pub fn check_realizability(spec: &NetworkSpec) -> RealizabilityReport {
    let mut report = RealizabilityReport::default();
    for i in 0..spec.nodes() {
        let g = spec.g(i);
        let t = spec.t(i);
        let nbrs = spec.neighbors(i);

        // TFs that must share each non-minimum-phase zero of G_i; the zero
        // function has every root.
        let mut carriers: Vec<(String, &RationalTF)> = vec![(format!("T_{}", spec.id(i)), t)];
        for &j in &nbrs {
            carriers.push((format!("W_{}_{}", spec.id(i), spec.id(j)), spec.w(i, j)));
            carriers.push((format!("Q_{}_{}", spec.id(i), spec.id(j)), spec.q(i, j)));
        }
        for z in g.zeros().into_iter().filter(unstable) {
            for (label, tf) in &carriers {
                if !tf.is_zero() && !has_root(&tf.zeros(), z) {
                    report.nmp_zero_violations.push(RootViolation {
                        node: i,
                        entry: label.clone(),
                        root: [z.re, z.im],
                    });
                }
            }
        }

        let g_poles = g.poles();
        let t_zeros = t.zeros();
        for &j in &nbrs {
            for p in spec.w(i, j).poles().into_iter().filter(unstable) {
                if !has_root(&g_poles, p) {
                    report.unstable_w_pole_violations.push(RootViolation {
                        node: i,
                        entry: format!("W_{}_{}", spec.id(i), spec.id(j)),
                        root: [p.re, p.im],
                    });
                }
            }
            for p in spec.f(i, j).poles().into_iter().filter(unstable) {
                if t.is_zero() || !has_root(&t_zeros, p) {
                    report.unstable_f_pole_violations.push(RootViolation {
                        node: i,
                        entry: format!("F_{}_{}", spec.id(i), spec.id(j)),
                        root: [p.re, p.im],
                    });
                }
            }
        }

        let g_rd = g.relative_degree();
        for (label, tf) in &carriers {
            let rd = tf.relative_degree();
            if !tf.is_zero() && rd < g_rd {
                report.causality_violations.push(CausalityViolation {
                    node: i,
                    entry: label.clone(),
                    relative_degree: rd,
                });
            }
        }
        if let Ok(node) = build_ideal_node(i, spec.subsystem(i), spec.reference(i)) {
            for (label, tf) in node.entries_named(|j| spec.id(j).to_string()) {
                let rd = tf.relative_degree();
                if rd < 0 {
                    report.causality_violations.push(CausalityViolation {
                        node: i,
                        entry: label,
                        relative_degree: rd,
                    });
                }
            }
        }
    }
    report
}

/// Finds `ρ` with `Σ_k ρ_k basis_k = target` by coefficient matching over
/// the product of all denominators.
pub fn match_coefficients(target: &RationalTF, basis: &[&RationalTF]) -> Result<(Vec<f64>, f64)> {
    if basis.is_empty() {
        return Ok((Vec::new(), target.num().max_abs()));
    }
    // Σ ρ_k n_k d_c Π_{m≠k} d_m = n_c Π_m d_m
    let all_dens = basis
        .iter()
        .fold(Polynomial::constant(1.0), |acc, b| acc.mul(b.den()));
    let rhs = target.num().mul(&all_dens);
    let cols: Vec<Polynomial> = (0..basis.len())
        .map(|k| {
            let others = basis
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != k)
                .fold(Polynomial::constant(1.0), |acc, (_, b)| acc.mul(b.den()));
            basis[k].num().mul(target.den()).mul(&others)
        })
        .collect();
    let len = cols
        .iter()
        .map(|c| c.coeffs().len())
        .chain([rhs.coeffs().len()])
        .max()
        .unwrap_or(1);
    let a =
        nalgebra::DMatrix::from_fn(len, basis.len(), |r, k| cols[k].coeff_of_power(len - 1 - r));
    let b = nalgebra::DVector::from_fn(len, |r, _| rhs.coeff_of_power(len - 1 - r));
    let svd = a.clone().svd(true, true);
    let rho = svd
        .solve(&b, 1e-12 * svd.singular_values.max())
        .map_err(|e| Error::Singular(e.to_string()))?;
    let residual = (&a * &rho - &b).norm() / b.norm().max(1.0);
    Ok((rho.iter().copied().collect(), residual))
}

/// Parameter vector `ρ_i^d` reproducing the ideal entries `C_ee`, `C_es`,
/// `C_ek` in the given linear parametrization.
pub fn map_to_parameters(
    ideal: &IdealControllerNode,
    param: &NodeParametrization,
) -> Result<Vec<f64>> {
    let mut rho = vec![0.0; param.len()];
    let mut targets: Vec<(Entry, RationalTF)> = vec![(Entry::Error, ideal.c_ee.clone())];
    let mut seen: Vec<Entry> = vec![Entry::Error];
    for (&j, tf) in &ideal.c_es {
        targets.push((Entry::Coupling(j), tf.clone()));
        seen.push(Entry::Coupling(j));
    }
    for (&j, tf) in &ideal.c_ek {
        targets.push((Entry::Reference(j), tf.clone()));
        seen.push(Entry::Reference(j));
    }
    for slot in param.slots() {
        if !seen.contains(&slot.entry) {
            seen.push(slot.entry);
            targets.push((slot.entry, RationalTF::zero()));
        }
    }
    for (entry, target) in targets {
        let idx: Vec<usize> = param
            .slots()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.entry == entry)
            .map(|(k, _)| k)
            .collect();
        if target.is_zero() {
            continue;
        }
        let basis: Vec<&RationalTF> = idx.iter().map(|&k| &param.slots()[k].basis).collect();
        let (coef, residual) = match_coefficients(&target, &basis)?;
        if residual > REPRESENTABLE_TOL {
            return Err(Error::NotRepresentable {
                entry: entry.label(),
                residual,
            });
        }
        for (k, c) in idx.into_iter().zip(coef) {
            rho[k] = c;
        }
    }
    Ok(rho)
}
