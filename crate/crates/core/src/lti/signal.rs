//! Finite-horizon signals and causal/anticausal filtering.

use serde::{Deserialize, Serialize};

use super::tf::RationalTF;
use crate::error::{Error, Result};

/// Real time series `x(start), x(start + 1), ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub start: i64,
}

impl Signal {
    pub fn new(samples: Vec<f64>) -> Self {
        Signal { samples, start: 0 }
    }

    pub fn with_start(samples: Vec<f64>, start: i64) -> Self {
        Signal { samples, start }
    }

    pub fn zeros(n: usize) -> Self {
        Signal::new(vec![0.0; n])
    }

    /// Unit step, `1` at every sample.
    pub fn step(n: usize, amplitude: f64) -> Self {
        Signal::new(vec![amplitude; n])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.samples
    }

    /// Keeps the first `n` samples.
    pub fn truncated(&self, n: usize) -> Self {
        Signal::with_start(self.samples[..n.min(self.len())].to_vec(), self.start)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn filtered(&self, tf: &RationalTF) -> Result<Signal> {
        filter(tf, self)
    }
}

/// Causal zero-initial-condition response of `a` to `x`.
pub fn filter(a: &RationalTF, x: &Signal) -> Result<Signal> {
    Ok(Signal::with_start(filter_slice(a, &x.samples)?, x.start))
}

/// Slice form of [`filter`].
pub fn filter_slice(a: &RationalTF, x: &[f64]) -> Result<Vec<f64>> {
    let rd = a.relative_degree();
    if rd < 0 {
        return Err(Error::Improper(rd));
    }
    if a.is_zero() {
        return Ok(vec![0.0; x.len()]);
    }
    let den = a.den().coeffs();
    let n = den.len() - 1;
    let num = a.num().padded(n + 1);
    let mut y = vec![0.0; x.len()];
    for t in 0..x.len() {
        let mut acc = 0.0;
        for (k, b) in num.iter().enumerate() {
            if *b != 0.0 && t >= k {
                acc += b * x[t - k];
            }
        }
        for (k, a) in den.iter().enumerate().skip(1) {
            if t >= k {
                acc -= a * y[t - k];
            }
        }
        y[t] = acc;
    }
    Ok(y)
}

/// Solves `a · r = x` for `r` using `r_d` samples of look-ahead, where `r_d`
/// is the relative degree of `a`. The result has `x.len() - r_d` samples.
pub fn inverse_filter(a: &RationalTF, x: &Signal) -> Result<Signal> {
    Ok(Signal::with_start(
        inverse_filter_slice(a, &x.samples)?,
        x.start,
    ))
}

pub fn inverse_filter_slice(a: &RationalTF, x: &[f64]) -> Result<Vec<f64>> {
    if a.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let rd = a.relative_degree();
    if rd < 0 {
        return Err(Error::Improper(rd));
    }
    let rd = rd as usize;
    if x.len() <= rd {
        return Err(Error::HorizonTooShort {
            needed: rd,
            got: x.len(),
        });
    }
    if a.zeros().iter().any(|z| z.norm() >= 1.0) {
        log::warn!("inverting {a}: numerator has roots on or outside the unit circle");
    }
    let den = a.den().coeffs();
    let num = a.num().coeffs();
    let b0 = num[0];
    let len = x.len() - rd;
    let mut r = vec![0.0; len];
    // den(q) x(t) = num(q) r(t - rd), indexed so that r(s) is solved from
    // x(s + rd - k) for k = 0..n.
    for s in 0..len {
        let mut acc = 0.0;
        for (k, a) in den.iter().enumerate() {
            let t = s + rd;
            if t >= k {
                acc += a * x[t - k];
            }
        }
        for (k, b) in num.iter().enumerate().skip(1) {
            if s >= k {
                acc -= b * r[s - k];
            }
        }
        r[s] = acc / b0;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t_ref() -> RationalTF {
        RationalTF::first_order(0.4, 0.6)
    }

    #[test]
    fn step_response_geometric() {
        let y = filter(&t_ref(), &Signal::step(30, 1.0)).unwrap();
        for (t, v) in y.samples.iter().enumerate() {
            assert!((v - (1.0 - 0.6_f64.powi(t as i32))).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_and_identity() {
        let x = Signal::new(vec![0.3, -1.0, 2.0, 0.5]);
        assert_eq!(
            filter(&t_ref(), &Signal::zeros(4)).unwrap().samples,
            vec![0.0; 4]
        );
        assert_eq!(filter(&RationalTF::one(), &x).unwrap(), x);
        assert_eq!(inverse_filter(&RationalTF::one(), &x).unwrap(), x);
    }

    #[test]
    fn improper_rejected() {
        let a = RationalTF::from_coeffs(&[1.0, 0.0, 0.0], &[1.0, -0.6]).unwrap();
        assert!(matches!(
            filter(&a, &Signal::zeros(3)),
            Err(Error::Improper(-1))
        ));
    }

    #[test]
    fn inverse_of_step() {
        let r = inverse_filter(&t_ref(), &Signal::step(20, 1.0)).unwrap();
        assert_eq!(r.len(), 19);
        for v in &r.samples {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let w: Vec<f64> = (0..50)
            .map(|k| ((k * 37 % 11) as f64 - 5.0) / 3.0)
            .collect();
        let x = filter(&t_ref(), &Signal::new(w.clone())).unwrap();
        let back = inverse_filter(&t_ref(), &x).unwrap();
        for (a, b) in back.samples.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn horizon_too_short() {
        let a = RationalTF::delay(3);
        assert!(matches!(
            inverse_filter(&a, &Signal::zeros(3)),
            Err(Error::HorizonTooShort { .. })
        ));
    }
}
