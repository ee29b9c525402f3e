//! Real polynomials in the forward shift `q`, stored in descending powers.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Polynomial `c[0] q^n + c[1] q^(n-1) + ... + c[n]`.
///
/// Leading zeros are stripped on construction, so the zero polynomial has an
/// empty coefficient vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        if p.coeffs.is_empty() {
            vec![0.0]
        } else {
            p.coeffs
        }
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        let lead = coeffs
            .iter()
            .position(|&c| c != 0.0)
            .unwrap_or(coeffs.len());
        coeffs.drain(..lead);
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `q^k`
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[0] = 1.0;
        Polynomial { coeffs }
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Polynomial::constant(1.0), |acc, &r| {
            acc.mul(&Polynomial::new(vec![1.0, -r]))
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Coefficient of `q^k`.
    pub fn coeff_of_power(&self, k: usize) -> f64 {
        if k > self.degree() || self.is_zero() {
            return 0.0;
        }
        self.coeffs[self.degree() - k]
    }

    /// Coefficients padded with leading zeros to length `len` (descending).
    pub fn padded(&self, len: usize) -> Vec<f64> {
        assert!(len >= self.coeffs.len());
        let mut out = vec![0.0; len - self.coeffs.len()];
        out.extend_from_slice(&self.coeffs);
        out
    }

    /// Drops leading coefficients whose magnitude is at most `rel_tol` times
    /// `scale`.
    pub fn trimmed(&self, rel_tol: f64, scale: f64) -> Self {
        let thresh = rel_tol * scale;
        let lead = self
            .coeffs
            .iter()
            .position(|c| c.abs() > thresh)
            .unwrap_or(self.coeffs.len());
        Polynomial {
            coeffs: self.coeffs[lead..].to_vec(),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let a = self.padded(n);
        let b = other.padded(n);
        Polynomial::new(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// Long division: `self = quot * divisor + rem`, `deg rem < deg divisor`.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        if self.coeffs.len() < divisor.coeffs.len() {
            return (Polynomial::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let dl = divisor.coeffs.len();
        let ql = rem.len() - dl + 1;
        let mut quot = vec![0.0; ql];
        for k in 0..ql {
            let f = rem[k] / divisor.coeffs[0];
            quot[k] = f;
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= f * d;
            }
            rem[k] = 0.0;
        }
        (Polynomial::new(quot), Polynomial::new(rem[ql..].to_vec()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `sum |c_k| |z|^k`, the magnitude scale against which `|p(z)|` is judged.
    pub fn eval_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().fold(0.0, |acc, c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs[..n]
                .iter()
                .enumerate()
                .map(|(k, c)| c * (n - k) as f64)
                .collect(),
        )
    }

    /// Roots from the eigenvalues of the companion matrix, polished by a few
    /// Newton steps.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if self.is_zero() || n == 0 {
            return Vec::new();
        }
        let lead = self.coeffs[0];
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            companion[(0, k)] = -self.coeffs[k + 1] / lead;
        }
        for k in 1..n {
            companion[(k, k - 1)] = 1.0;
        }
        let d = self.derivative();
        companion
            .complex_eigenvalues()
            .iter()
            .map(|&z0| {
                let mut z = z0;
                let mut pz = self.eval_complex(z);
                for _ in 0..3 {
                    let dz = d.eval_complex(z);
                    if dz.norm() == 0.0 {
                        break;
                    }
                    let cand = z - pz / dz;
                    let pc = self.eval_complex(cand);
                    if pc.norm() < pz.norm() {
                        z = cand;
                        pz = pc;
                    } else {
                        break;
                    }
                }
                z
            })
            .collect()
    }
}

/// `a` rounded to 12 significant digits, or to the formatter's precision.
fn write_coeff(f: &mut fmt::Formatter<'_>, a: f64) -> fmt::Result {
    match f.precision() {
        Some(p) => write!(f, "{a:.p$}"),
        None => {
            let r: f64 = format!("{a:.11e}").parse().unwrap_or(a);
            write!(f, "{r}")
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let n = self.degree();
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let p = n - k;
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match p {
                0 => write_coeff(f, a)?,
                _ if a == 1.0 => {}
                _ => write_coeff(f, a)?,
            }
            match p {
                0 => {}
                1 => write!(f, "q")?,
                _ => write!(f, "q^{p}")?,
            }
        }
        Ok(())
    }
}
