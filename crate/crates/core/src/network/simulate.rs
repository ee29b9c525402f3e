//! Time-domain simulation of the plant network and the reference model.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::spec::{MultiSignal, NetworkSpec};
use crate::error::{Error, Result};
use crate::lti::{GraphRealization, Signal, SignalGraph, Source};

/// Signal graph of the plant: signals `y_0..y_{L-1}` first, then one `s_ij`
/// per directed edge; inputs `u_0..u_{L-1}`.
pub fn plant_graph(spec: &NetworkSpec) -> SignalGraph {
    let l = spec.nodes();
    let mut g = SignalGraph::new(l);
    for i in 0..l {
        g.add_signal(format!("y_{}", spec.id(i)));
    }
    for (i, j) in spec.graph().directed_edges() {
        let s = g.add_signal(format!("s_{}_{}", spec.id(i), spec.id(j)));
        g.connect(Source::Signal(j), s, spec.f(j, i).clone());
        g.connect(Source::Signal(s), i, spec.w(i, j).clone());
    }
    for i in 0..l {
        g.connect(Source::Input(i), i, spec.g(i).clone());
    }
    g
}

/// Signal graph of the reference model: signals `y^d_0..y^d_{L-1}` first,
/// then one `k_ij` per directed edge; inputs `r_0..r_{L-1}`.
pub fn reference_graph(spec: &NetworkSpec) -> SignalGraph {
    let l = spec.nodes();
    let mut g = SignalGraph::new(l);
    for i in 0..l {
        g.add_signal(format!("yd_{}", spec.id(i)));
    }
    for (i, j) in spec.graph().directed_edges() {
        if spec.q(i, j).is_zero() || spec.p(j, i).is_zero() {
            continue;
        }
        let k = g.add_signal(format!("k_{}_{}", spec.id(i), spec.id(j)));
        g.connect(Source::Signal(j), k, spec.p(j, i).clone());
        g.connect(Source::Signal(k), i, spec.q(i, j).clone());
    }
    for i in 0..l {
        g.connect(Source::Input(i), i, spec.t(i).clone());
    }
    g
}

fn run_nodes(real: &GraphRealization, inputs: &MultiSignal, l: usize) -> Result<MultiSignal> {
    let start = inputs.channels().first().map_or(0, |c| c.start);
    let out = real.simulate(&inputs.rows())?;
    MultiSignal::new(
        out.into_iter()
            .take(l)
            .map(|s| Signal::with_start(s, start))
            .collect(),
    )
}

/// Noise-free plant response to `u`, plus optional additive output noise.
pub fn simulate_plant(
    spec: &NetworkSpec,
    u: &MultiSignal,
    noise: Option<&MultiSignal>,
) -> Result<MultiSignal> {
    let l = spec.nodes();
    if u.len() != l {
        return Err(Error::Dimension(format!(
            "{} input channels for {l} nodes",
            u.len()
        )));
    }
    let real = plant_graph(spec).realize()?;
    let y = run_nodes(&real, u, l)?;
    match noise {
        Some(v) => y.add(v),
        None => Ok(y),
    }
}

/// Reference-model response `y_d = (I - QΔP)^{-1} T r`.
pub fn simulate_reference(spec: &NetworkSpec, r: &MultiSignal) -> Result<MultiSignal> {
    let l = spec.nodes();
    if r.len() != l {
        return Err(Error::Dimension(format!(
            "{} reference channels for {l} nodes",
            r.len()
        )));
    }
    let real = reference_graph(spec).realize()?;
    run_nodes(&real, r, l)
}

/// Independent zero-mean Gaussian white noise per channel.
pub fn white_noise<R: Rng>(
    rng: &mut R,
    channels: usize,
    horizon: usize,
    sigma: f64,
) -> MultiSignal {
    if sigma == 0.0 {
        return MultiSignal::zeros(channels, horizon);
    }
    let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
    MultiSignal::new(
        (0..channels)
            .map(|_| Signal::new((0..horizon).map(|_| normal.sample(rng)).collect()))
            .collect(),
    )
    .expect("equal horizons")
}

/// Sinusoid `sin(ω t + φ)` for `t = 0..n`.
pub fn sinusoid(n: usize, omega: f64, phase: f64) -> Signal {
    Signal::new((0..n).map(|t| (omega * t as f64 + phase).sin()).collect())
}
