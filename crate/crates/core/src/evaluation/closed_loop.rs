//! Plant plus distributed controller as one interconnection.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::controller::DistributedController;
use crate::error::{Error, Result};
use crate::lti::{GraphRealization, RationalTF, Signal, SignalGraph, Source};
use crate::network::{plant_transfer_eval, reference_transfer_eval, MultiSignal, NetworkSpec};

/// Output magnitude treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e9;

/// Adds the controller signals `u_i`, `o^c_ij`, `p^c_ij` to `g`; `e(i)` is
/// where node `i` reads its tracking error. Returns the indices of `u_i`.
fn add_controller(
    g: &mut SignalGraph,
    spec: &NetworkSpec,
    ctrl: &DistributedController,
    e: impl Fn(usize) -> Source,
) -> Vec<usize> {
    let l = spec.nodes();
    let u: Vec<usize> = (0..l)
        .map(|i| g.add_signal(format!("u_{}", spec.id(i))))
        .collect();
    let mut o = std::collections::BTreeMap::new();
    let mut p = std::collections::BTreeMap::new();
    for (i, node) in ctrl.nodes.iter().enumerate() {
        for &j in node.k_o.keys().chain(node.k_oq.keys().map(|(j, _)| j)) {
            o.entry((i, j))
                .or_insert_with(|| g.add_signal(format!("o_c_{}_{}", spec.id(i), spec.id(j))));
        }
        for &j in node.k_p.keys().chain(node.k_pq.keys().map(|(j, _)| j)) {
            p.entry((i, j))
                .or_insert_with(|| g.add_signal(format!("p_c_{}_{}", spec.id(i), spec.id(j))));
        }
    }
    for (i, node) in ctrl.nodes.iter().enumerate() {
        g.connect(e(i), u[i], node.c_ee.clone());
        // s^c_ij = o^c_ji, k^c_ij = p^c_ji
        for (&j, tf) in &node.c_es {
            if let Some(&s) = o.get(&(j, i)) {
                g.connect(Source::Signal(s), u[i], tf.clone());
            }
        }
        for (&j, tf) in &node.c_ek {
            if let Some(&s) = p.get(&(j, i)) {
                g.connect(Source::Signal(s), u[i], tf.clone());
            }
        }
        for (&j, tf) in &node.k_o {
            g.connect(e(i), o[&(i, j)], tf.clone());
        }
        for (&(j, h), tf) in &node.k_oq {
            if let Some(&s) = p.get(&(h, i)) {
                g.connect(Source::Signal(s), o[&(i, j)], tf.clone());
            }
        }
        for (&j, tf) in &node.k_p {
            g.connect(e(i), p[&(i, j)], tf.clone());
        }
        for (&(j, h), tf) in &node.k_pq {
            if let Some(&s) = p.get(&(h, i)) {
                g.connect(Source::Signal(s), p[&(i, j)], tf.clone());
            }
        }
    }
    u
}

/// Closed loop with inputs `r_0..r_{L-1}` followed by output noise
/// `v_0..v_{L-1}`.
#[derive(Clone, Debug)]
pub struct ClosedLoopSystem {
    pub graph: SignalGraph,
    pub realization: GraphRealization,
    pub y_index: Vec<usize>,
    pub u_index: Vec<usize>,
}

/// Interconnects plant and controller with `e_i = r_i - y_i` and the
/// pairing `s^c_ij = o^c_ji`, `k^c_ij = p^c_ji`.
pub fn assemble_closed_loop(
    spec: &NetworkSpec,
    ctrl: &DistributedController,
) -> Result<ClosedLoopSystem> {
    let l = spec.nodes();
    if ctrl.nodes.len() != l {
        return Err(Error::Dimension(format!(
            "{} controller nodes for {l} plant nodes",
            ctrl.nodes.len()
        )));
    }
    let mut g = SignalGraph::new(2 * l);
    let y: Vec<usize> = (0..l)
        .map(|i| g.add_signal(format!("y_{}", spec.id(i))))
        .collect();
    let e: Vec<usize> = (0..l)
        .map(|i| g.add_signal(format!("e_{}", spec.id(i))))
        .collect();
    for i in 0..l {
        g.connect(Source::Input(i), e[i], RationalTF::one());
        g.connect(Source::Signal(y[i]), e[i], RationalTF::constant(-1.0));
        g.connect(Source::Input(l + i), y[i], RationalTF::one());
    }
    let u = add_controller(&mut g, spec, ctrl, |i| Source::Signal(e[i]));
    for (i, j) in spec.graph().directed_edges() {
        let s = g.add_signal(format!("s_{}_{}", spec.id(i), spec.id(j)));
        g.connect(Source::Signal(y[j]), s, spec.f(j, i).clone());
        g.connect(Source::Signal(s), y[i], spec.w(i, j).clone());
    }
    for i in 0..l {
        g.connect(Source::Signal(u[i]), y[i], spec.g(i).clone());
    }
    let realization = g.realize()?;
    log::debug!(
        "closed loop: {} states, feedthrough condition {:e}",
        realization.ss.states(),
        realization.condition
    );
    Ok(ClosedLoopSystem {
        graph: g,
        realization,
        y_index: y,
        u_index: u,
    })
}

impl ClosedLoopSystem {
    pub fn nodes(&self) -> usize {
        self.y_index.len()
    }

    /// Condition number of the eliminated feedthrough loop.
    pub fn condition(&self) -> f64 {
        self.realization.condition
    }

    /// Transfer `r → y` at `e^{jω}`.
    pub fn freq_response(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        let full = self.graph.freq_response(omega)?;
        let l = self.nodes();
        Ok(DMatrix::from_fn(l, l, |i, j| full[(self.y_index[i], j)]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopResponse {
    pub y: MultiSignal,
    pub u: MultiSignal,
    pub diverged: bool,
}

/// Zero-initial-state response to `r`, with optional output noise.
pub fn simulate_closed_loop(
    cls: &ClosedLoopSystem,
    r: &MultiSignal,
    noise: Option<&MultiSignal>,
) -> Result<ClosedLoopResponse> {
    let l = cls.nodes();
    if r.len() != l {
        return Err(Error::Dimension(format!(
            "{} reference channels for {l} nodes",
            r.len()
        )));
    }
    let n = r.horizon();
    let mut inputs = r.rows();
    match noise {
        Some(v) if v.len() != l || v.horizon() != n => {
            return Err(Error::Dimension(
                "noise shape differs from reference".into(),
            ))
        }
        Some(v) => inputs.extend(v.rows()),
        None => inputs.extend(std::iter::repeat_n(vec![0.0; n], l)),
    }
    let out = cls.realization.simulate(&inputs)?;
    let start = r.channels().first().map_or(0, |c| c.start);
    let pick = |idx: &[usize]| {
        MultiSignal::new(
            idx.iter()
                .map(|&k| Signal::with_start(out[k].clone(), start))
                .collect(),
        )
    };
    let y = pick(&cls.y_index)?;
    let u = pick(&cls.u_index)?;
    let diverged = y
        .channels()
        .iter()
        .flat_map(|c| c.samples.iter())
        .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND);
    if diverged {
        log::warn!("closed-loop response exceeds {DIVERGENCE_BOUND:e}");
    }
    Ok(ClosedLoopResponse { y, u, diverged })
}

/// `(1/N) Σ_t Σ_i (y^d_i(t) - y_i(t))²`
pub fn estimate_jmr(y: &MultiSignal, y_d: &MultiSignal) -> Result<f64> {
    if y.len() != y_d.len() || y.horizon() != y_d.horizon() {
        return Err(Error::Dimension(
            "output and reference output shapes differ".into(),
        ));
    }
    let n = y.horizon();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = y
        .channels()
        .iter()
        .zip(y_d.channels())
        .flat_map(|(a, b)| {
            a.samples
                .iter()
                .zip(&b.samples)
                .map(|(p, q)| (q - p).powi(2))
        })
        .sum();
    Ok(sum / n as f64)
}

fn controller_graph(spec: &NetworkSpec, ctrl: &DistributedController) -> (SignalGraph, Vec<usize>) {
    let mut g = SignalGraph::new(spec.nodes());
    let u = add_controller(&mut g, spec, ctrl, Source::Input);
    (g, u)
}

fn select(full: &DMatrix<Complex64>, rows: &[usize]) -> DMatrix<Complex64> {
    let l = rows.len();
    DMatrix::from_fn(l, full.ncols().min(l), |i, j| full[(rows[i], j)])
}

/// Transfer `e → u` of the whole distributed controller at `e^{jω}`.
pub fn controller_transfer_eval(
    spec: &NetworkSpec,
    ctrl: &DistributedController,
    omega: f64,
) -> Result<DMatrix<Complex64>> {
    let (g, u) = controller_graph(spec, ctrl);
    Ok(select(&g.freq_response(omega)?, &u))
}

fn loop_transfer(
    spec: &NetworkSpec,
    k: DMatrix<Complex64>,
    omega: f64,
) -> Result<DMatrix<Complex64>> {
    let l = spec.nodes();
    let pk = plant_transfer_eval(spec, omega)? * k;
    let lhs = DMatrix::<Complex64>::identity(l, l) + &pk;
    lhs.lu()
        .solve(&pk)
        .ok_or_else(|| Error::Singular(format!("I + PK at omega = {omega}")))
}

/// Transfer `r → y` of plant and controller, `(I + P K)^{-1} P K`.
pub fn closed_loop_transfer_eval(
    spec: &NetworkSpec,
    ctrl: &DistributedController,
    omega: f64,
) -> Result<DMatrix<Complex64>> {
    loop_transfer(spec, controller_transfer_eval(spec, ctrl, omega)?, omega)
}

/// `max_ω ‖T_I(e^{jω}) - T_d(e^{jω})‖₂` over `grid`. Grid points where a
/// transfer has a pole are skipped.
pub fn performance_metric(
    spec: &NetworkSpec,
    ctrl: &DistributedController,
    grid: &[f64],
) -> Result<f64> {
    let (g, u) = controller_graph(spec, ctrl);
    let mut worst = 0.0_f64;
    let mut used = 0;
    for &w in grid {
        let ti = g
            .freq_response(w)
            .and_then(|k| loop_transfer(spec, select(&k, &u), w));
        let diff = match (ti, reference_transfer_eval(spec, w)) {
            (Ok(ti), Ok(td)) => ti - td,
            (Err(e), _) | (_, Err(e)) => {
                log::warn!("skipping omega = {w}: {e}");
                continue;
            }
        };
        used += 1;
        worst = worst.max(diff.singular_values().max());
    }
    if used == 0 && !grid.is_empty() {
        return Err(Error::Singular("no usable grid point".into()));
    }
    Ok(worst)
}
