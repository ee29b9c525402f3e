//! Interconnections of scalar transfer functions.
//!
//! A [`SignalGraph`] is a set of scalar signals, each defined as a sum of
//! transfer functions applied to other signals or to external inputs:
//!
//! ```text
//! v_k = Σ_{links l with l.to = k} H_l(q) src_l
//! ```
//!
//! The graph can be evaluated in the frequency domain by a dense solve, or
//! realized as one global state-space model whose outputs are all signals.
//! Realization eliminates the static feedthrough loop once at assembly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::realization::{realize, StateSpace};
use super::tf::RationalTF;
use crate::error::{Error, Result};

/// Condition number of `I - D_loop` above which the loop is ill-posed.
pub const WELL_POSED_COND: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Signal(usize),
    Input(usize),
}

#[derive(Clone, Debug)]
pub struct Link {
    pub from: Source,
    pub to: usize,
    pub tf: RationalTF,
}

#[derive(Clone, Debug, Default)]
pub struct SignalGraph {
    inputs: usize,
    labels: Vec<String>,
    links: Vec<Link>,
}

/// Global realization of a [`SignalGraph`]; outputs are all signals in
/// creation order, inputs are the external inputs.
#[derive(Clone, Debug)]
pub struct GraphRealization {
    pub ss: StateSpace,
    /// Condition number of the eliminated feedthrough matrix `I - D_loop`.
    pub condition: f64,
}

impl SignalGraph {
    pub fn new(inputs: usize) -> Self {
        SignalGraph {
            inputs,
            labels: Vec::new(),
            links: Vec::new(),
        }
    }

    pub fn add_signal(&mut self, label: impl Into<String>) -> usize {
        self.labels.push(label.into());
        self.labels.len() - 1
    }

    /// Adds `tf · from` to signal `to`. Zero transfer functions are dropped.
    pub fn connect(&mut self, from: Source, to: usize, tf: RationalTF) {
        assert!(to < self.labels.len(), "unknown target signal {to}");
        match from {
            Source::Signal(s) => assert!(s < self.labels.len(), "unknown source signal {s}"),
            Source::Input(e) => assert!(e < self.inputs, "unknown input {e}"),
        }
        if !tf.is_zero() {
            self.links.push(Link { from, to, tf });
        }
    }

    pub fn signals(&self) -> usize {
        self.labels.len()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Transfer from every input to every signal at `z` (signals × inputs).
    pub fn eval(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let m = self.signals();
        let mut lhs = DMatrix::<Complex64>::identity(m, m);
        let mut rhs = DMatrix::<Complex64>::zeros(m, self.inputs);
        for link in &self.links {
            let d = link.tf.den().eval_complex(z);
            if d.norm() <= 1e-12 * link.tf.den().eval_scale(z) {
                return Err(Error::PoleOnGrid(z.arg()));
            }
            let h = link.tf.num().eval_complex(z) / d;
            match link.from {
                Source::Signal(s) => lhs[(link.to, s)] -= h,
                Source::Input(e) => rhs[(link.to, e)] += h,
            }
        }
        lhs.lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("interconnection at z = {z}")))
    }

    pub fn freq_response(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        self.eval(Complex64::from_polar(1.0, omega))
    }

    pub fn realize(&self) -> Result<GraphRealization> {
        let m = self.signals();
        let k = self.inputs;
        let blocks: Vec<StateSpace> = self
            .links
            .iter()
            .map(|l| realize(&l.tf))
            .collect::<Result<_>>()?;
        let n: usize = blocks.iter().map(StateSpace::states).sum();

        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut bv = DMatrix::<f64>::zeros(n, m);
        let mut bw = DMatrix::<f64>::zeros(n, k);
        let mut cx = DMatrix::<f64>::zeros(m, n);
        let mut dv = DMatrix::<f64>::zeros(m, m);
        let mut dw = DMatrix::<f64>::zeros(m, k);

        let mut off = 0;
        for (link, ss) in self.links.iter().zip(&blocks) {
            let nb = ss.states();
            a.view_mut((off, off), (nb, nb)).copy_from(&ss.a);
            for r in 0..nb {
                cx[(link.to, off + r)] += ss.c[(0, r)];
            }
            match link.from {
                Source::Signal(s) => {
                    for r in 0..nb {
                        bv[(off + r, s)] += ss.b[(r, 0)];
                    }
                    dv[(link.to, s)] += ss.d[(0, 0)];
                }
                Source::Input(e) => {
                    for r in 0..nb {
                        bw[(off + r, e)] += ss.b[(r, 0)];
                    }
                    dw[(link.to, e)] += ss.d[(0, 0)];
                }
            }
            off += nb;
        }

        let loop_matrix = DMatrix::<f64>::identity(m, m) - dv;
        let condition = if m == 0 {
            1.0
        } else {
            let sv = loop_matrix.singular_values();
            let smax = sv.max();
            let smin = sv.min();
            if smin == 0.0 {
                f64::INFINITY
            } else {
                smax / smin
            }
        };
        if !(condition < WELL_POSED_COND) {
            return Err(Error::IllPosed(condition));
        }
        let s = loop_matrix
            .try_inverse()
            .ok_or(Error::IllPosed(f64::INFINITY))?;
        let c = &s * &cx;
        let d = &s * &dw;
        let a = a + &bv * &c;
        let b = bw + &bv * &d;
        Ok(GraphRealization {
            ss: StateSpace::new(a, b, c, d)?,
            condition,
        })
    }
}

impl GraphRealization {
    /// Simulates with zero initial state. `inputs[e]` is the time series of
    /// input `e`; returns one time series per signal.
    pub fn simulate(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let k = self.ss.inputs();
        if inputs.len() != k {
            return Err(Error::Dimension(format!(
                "expected {k} input series, got {}",
                inputs.len()
            )));
        }
        let horizon = inputs.first().map_or(0, Vec::len);
        if inputs.iter().any(|s| s.len() != horizon) {
            return Err(Error::Dimension("input series lengths differ".into()));
        }
        let m = self.ss.outputs();
        let mut out = vec![Vec::with_capacity(horizon); m];
        let mut x = DVector::zeros(self.ss.states());
        let mut w = DVector::zeros(k);
        for t in 0..horizon {
            for e in 0..k {
                w[e] = inputs[e][t];
            }
            let y = &self.ss.c * &x + &self.ss.d * &w;
            x = &self.ss.a * &x + &self.ss.b * &w;
            for (series, v) in out.iter_mut().zip(y.iter()) {
                series.push(*v);
            }
        }
        Ok(out)
    }
}
