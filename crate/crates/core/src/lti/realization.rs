//! Controllable canonical state-space realizations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::tf::RationalTF;
use crate::error::{Error, Result};

/// `x(t+1) = A x(t) + B u(t)`, `y(t) = C x(t) + D u(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n
            || b.nrows() != n
            || c.ncols() != n
            || d.nrows() != c.nrows()
            || d.ncols() != b.ncols()
        {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Zero-initial-state simulation. `u[k]` is the input vector at step `k`.
    pub fn simulate(&self, u: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let mut x = DVector::zeros(self.states());
        u.iter()
            .map(|uk| {
                let y = &self.c * &x + &self.d * uk;
                x = &self.a * &x + &self.b * uk;
                y
            })
            .collect()
    }

    /// SISO convenience wrapper around [`StateSpace::simulate`].
    pub fn simulate_siso(&self, u: &[f64]) -> Vec<f64> {
        let inputs: Vec<_> = u.iter().map(|&v| DVector::from_element(1, v)).collect();
        self.simulate(&inputs).into_iter().map(|y| y[0]).collect()
    }

    /// `C (zI - A)^{-1} B + D` at `z`.
    pub fn eval(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.states();
        let ac = self.a.map(|v| Complex64::new(v, 0.0));
        let bc = self.b.map(|v| Complex64::new(v, 0.0));
        let cc = self.c.map(|v| Complex64::new(v, 0.0));
        let dc = self.d.map(|v| Complex64::new(v, 0.0));
        if n == 0 {
            return Ok(dc);
        }
        let m = DMatrix::<Complex64>::identity(n, n) * z - ac;
        let x = m
            .lu()
            .solve(&bc)
            .ok_or_else(|| Error::Singular("zI - A at evaluation point".into()))?;
        Ok(cc * x + dc)
    }

    pub fn freq_response(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        self.eval(Complex64::from_polar(1.0, omega))
    }
}

/// Controllable canonical form of a proper scalar transfer function.
pub fn realize(tf: &RationalTF) -> Result<StateSpace> {
    let rd = tf.relative_degree();
    if rd < 0 {
        return Err(Error::Improper(rd));
    }
    let den = tf.den();
    let n = den.degree();
    let (dval, rem) = if tf.is_zero() {
        (0.0, tf.num().clone())
    } else if rd == 0 {
        let d = tf.num().leading();
        (d, tf.num().sub(&den.scale(d)))
    } else {
        (0.0, tf.num().clone())
    };
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 1);
    let mut c = DMatrix::zeros(1, n);
    if n > 0 {
        for k in 0..n {
            a[(0, k)] = -den.coeffs()[k + 1];
            // rem = c1 q^{n-1} + ... + cn
            c[(0, k)] = rem.coeff_of_power(n - 1 - k);
        }
        for k in 1..n {
            a[(k, k - 1)] = 1.0;
        }
        b[(0, 0)] = 1.0;
    }
    let d = DMatrix::from_element(1, 1, dval);
    StateSpace::new(a, b, c, d)
}
