//! Scalar rational transfer functions of the forward shift `q`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::polynomial::Polynomial;
use crate::error::{Error, Result};

/// Default tolerance for pole/zero cancellation, relative to coefficient
/// magnitude.
pub const DEFAULT_CANCEL_TOL: f64 = 1e-9;

/// Relative degree reported for the zero transfer function.
pub const REL_DEGREE_INF: i64 = i64::MAX;

/// Numerator coefficients below this fraction of the denominator scale are
/// numerical noise.
const COEFF_NOISE: f64 = 1e-13;

/// `num(q) / den(q)` with a monic denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf", into = "RawTf")]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Serialize, Deserialize)]
struct RawTf {
    num: Vec<f64>,
    #[serde(default = "unit_den")]
    den: Vec<f64>,
}

fn unit_den() -> Vec<f64> {
    vec![1.0]
}

impl TryFrom<RawTf> for RationalTF {
    type Error = Error;
    fn try_from(raw: RawTf) -> Result<Self> {
        RationalTF::new(Polynomial::new(raw.num), Polynomial::new(raw.den))
    }
}

impl From<RationalTF> for RawTf {
    fn from(tf: RationalTF) -> Self {
        RawTf {
            num: tf.num.into(),
            den: tf.den.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithKind {
    Add,
    Sub,
    Mul,
    Div,
}

impl RationalTF {
    /// Builds a normalized transfer function (monic denominator, noise-level
    /// leading numerator coefficients dropped). No cancellation is done here.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let lead = den.leading();
        let den = den.scale(1.0 / lead);
        let num = num.scale(1.0 / lead);
        let num = num.trimmed(COEFF_NOISE, den.max_abs().max(num.max_abs()));
        let den = if num.is_zero() {
            Polynomial::constant(1.0)
        } else {
            den
        };
        Ok(RationalTF { num, den })
    }

    /// Convenience constructor from descending coefficient slices.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        RationalTF::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    pub fn constant(c: f64) -> Self {
        RationalTF::new(Polynomial::constant(c), Polynomial::constant(1.0))
            .expect("unit denominator")
    }

    pub fn zero() -> Self {
        RationalTF::constant(0.0)
    }

    pub fn one() -> Self {
        RationalTF::constant(1.0)
    }

    /// `k / (q - p)`
    pub fn first_order(k: f64, pole: f64) -> Self {
        RationalTF::from_coeffs(&[k], &[1.0, -pole]).expect("nonzero denominator")
    }

    /// `q^-k`
    pub fn delay(k: usize) -> Self {
        RationalTF::new(Polynomial::constant(1.0), Polynomial::monomial(k))
            .expect("nonzero denominator")
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// True when the transfer function is the constant `c` (within `tol`).
    pub fn is_constant(&self, c: f64, tol: f64) -> bool {
        self.den.degree() == 0 && self.num.degree() == 0 && (self.num.leading() - c).abs() <= tol
            || (c == 0.0 && self.is_zero())
    }

    /// `deg(den) - deg(num)`; [`REL_DEGREE_INF`] for the zero function.
    pub fn relative_degree(&self) -> i64 {
        if self.is_zero() {
            REL_DEGREE_INF
        } else {
            self.den.degree() as i64 - self.num.degree() as i64
        }
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree() >= 0
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree() >= 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval_complex(z) / self.den.eval_complex(z)
    }

    /// Frequency response `num(e^{jω}) / den(e^{jω})`.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        let z = Complex64::from_polar(1.0, omega);
        let d = self.den.eval_complex(z);
        if d.norm() <= 1e-12 * self.den.eval_scale(z) {
            return Err(Error::PoleOnGrid(omega));
        }
        Ok(self.num.eval_complex(z) / d)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.num.roots()
    }

    pub fn scale(&self, k: f64) -> Self {
        RationalTF::new(self.num.scale(k), self.den.clone()).expect("nonzero denominator")
    }

    /// Cancels common numerator/denominator roots that agree within `tol`.
    pub fn simplify(&self, tol: f64) -> Self {
        simplify(self, tol)
    }

    pub fn add_tol(&self, other: &Self, tol: f64) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if same_poly(&self.den, &other.den) {
            return RationalTF::new(self.num.add(&other.num), self.den.clone())
                .expect("nonzero denominator")
                .simplify(tol);
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RationalTF::new(num, den)
            .expect("nonzero denominator")
            .simplify(tol)
    }

    pub fn mul_tol(&self, other: &Self, tol: f64) -> Self {
        if self.is_zero() || other.is_zero() {
            return RationalTF::zero();
        }
        RationalTF::new(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("nonzero denominator")
            .simplify(tol)
    }

    pub fn div_tol(&self, other: &Self, tol: f64) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(RationalTF::zero());
        }
        Ok(RationalTF::new(self.num.mul(&other.den), self.den.mul(&other.num))?.simplify(tol))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.div_tol(other, DEFAULT_CANCEL_TOL)
    }

    /// `1 / self`
    pub fn recip(&self) -> Result<Self> {
        RationalTF::one().checked_div(self)
    }
}

/// Binary transfer-function arithmetic with simplification at `tol`.
pub fn tf_arith(a: &RationalTF, b: &RationalTF, kind: ArithKind, tol: f64) -> Result<RationalTF> {
    match kind {
        ArithKind::Add => Ok(a.add_tol(b, tol)),
        ArithKind::Sub => Ok(a.add_tol(&-b, tol)),
        ArithKind::Mul => Ok(a.mul_tol(b, tol)),
        ArithKind::Div => a.div_tol(b, tol),
    }
}

fn same_poly(a: &Polynomial, b: &Polynomial) -> bool {
    a.degree() == b.degree()
        && a.coeffs()
            .iter()
            .zip(b.coeffs())
            .all(|(x, y)| (x - y).abs() <= 1e-14 * (1.0 + x.abs()))
}

/// Worst-case relative residual of `p` at `z`.
fn rel_residual(p: &Polynomial, z: Complex64) -> f64 {
    let s = p.eval_scale(z);
    if s == 0.0 {
        return 0.0;
    }
    p.eval_complex(z).norm() / s
}

fn simplify(tf: &RationalTF, tol: f64) -> RationalTF {
    let mut num = tf.num.clone();
    let mut den = tf.den.clone();
    loop {
        if num.is_zero() {
            return RationalTF::zero();
        }
        if num.degree() == 0 || den.degree() == 0 {
            break;
        }
        let best = num
            .roots()
            .into_iter()
            .chain(den.roots())
            .map(|z| (z, rel_residual(&num, z).max(rel_residual(&den, z))))
            .filter(|(_, s)| *s <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((z, _)) = best else { break };
        let factor = if z.im.abs() <= tol * (1.0 + z.norm()) {
            Polynomial::new(vec![1.0, -z.re])
        } else {
            Polynomial::new(vec![1.0, -2.0 * z.re, z.norm_sqr()])
        };
        if factor.degree() > num.degree() || factor.degree() > den.degree() {
            break;
        }
        num = num.div_rem(&factor).0;
        den = den.div_rem(&factor).0;
    }
    RationalTF::new(num, den).expect("nonzero denominator")
}

impl Neg for &RationalTF {
    type Output = RationalTF;
    fn neg(self) -> RationalTF {
        self.scale(-1.0)
    }
}

impl Neg for RationalTF {
    type Output = RationalTF;
    fn neg(self) -> RationalTF {
        self.scale(-1.0)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&RationalTF> for &RationalTF {
            type Output = RationalTF;
            fn $method(self, rhs: &RationalTF) -> RationalTF {
                let f: fn(&RationalTF, &RationalTF) -> RationalTF = $body;
                f(self, rhs)
            }
        }
        impl $tr<RationalTF> for RationalTF {
            type Output = RationalTF;
            fn $method(self, rhs: RationalTF) -> RationalTF {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a.add_tol(b, DEFAULT_CANCEL_TOL));
binop!(Sub, sub, |a, b| a.add_tol(&-b, DEFAULT_CANCEL_TOL));
binop!(Mul, mul, |a, b| a.mul_tol(b, DEFAULT_CANCEL_TOL));

impl fmt::Display for RationalTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}
