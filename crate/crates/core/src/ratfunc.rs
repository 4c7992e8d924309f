//! Rational functions as irreducible fractions of polynomials.
//!
//! Canonical form: `gcd(num, den) = 1`, the denominator is monic and nonzero.
//! The gcd is removed eagerly on every arithmetic result, so equality is
//! structural equality. For floating scalars the gcd step degenerates to a
//! constant and only the monic normalization acts, which is the behavior the
//! solver lane wants.

use crate::poly::{Poly, PolyError};
use crate::scalar::Scalar;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, PartialEq)]
pub struct RatFunc<K: Scalar> {
    num: Poly<K>,
    den: Poly<K>,
}

impl<K: Scalar> RatFunc<K> {
    /// Reduces `num/den` to the canonical irreducible fraction.
    pub fn new(num: Poly<K>, den: Poly<K>) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(RatFunc {
                num: Poly::zero(),
                den: Poly::one(),
            });
        }
        let (mut num, mut den) = (num, den);
        if K::EXACT {
            let g = num.gcd(&den);
            if !g.is_one() {
                num = num.exact_div(&g)?;
                den = den.exact_div(&g)?;
            }
        }
        let lc_inv = den.leading().unwrap().inv();
        Ok(RatFunc {
            num: num.scale(&lc_inv),
            den: den.scale(&lc_inv),
        })
    }

    pub fn from_poly(p: Poly<K>) -> Self {
        RatFunc {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: K) -> Self {
        RatFunc::from_poly(Poly::constant(c))
    }

    pub fn zero() -> Self {
        RatFunc::from_poly(Poly::zero())
    }

    pub fn one() -> Self {
        RatFunc::from_poly(Poly::one())
    }

    pub fn num(&self) -> &Poly<K> {
        &self.num
    }

    pub fn den(&self) -> &Poly<K> {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// The numerator when the fraction is a polynomial.
    pub fn as_poly(&self) -> Option<&Poly<K>> {
        self.is_polynomial().then_some(&self.num)
    }

    pub fn inv(&self) -> Result<Self, PolyError> {
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    /// Integer power; negative exponents require a nonzero base.
    pub fn powi(&self, e: i64) -> Result<Self, PolyError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = RatFunc::one();
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> Self {
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        let den = &self.den * &self.den;
        RatFunc::new(num, den).expect("nonzero denominator square")
    }

    /// `f'/f` as an irreducible fraction.
    pub fn log_derivative(&self) -> Result<Self, PolyError> {
        if self.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        let den = &self.num * &self.den;
        RatFunc::new(num, den)
    }

    /// `None` at poles of the reduced fraction.
    pub fn eval(&self, z: &K) -> Option<K> {
        let d = self.den.eval(z);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(z) / d)
    }

    pub fn map<L: Scalar>(&self, f: impl Fn(&K) -> L) -> RatFunc<L> {
        // coefficient maps preserve the monic denominator, no re-reduction
        RatFunc {
            num: self.num.map(&f),
            den: self.den.map(&f),
        }
    }
}

/// `ln' f = f'/f`; the free-function spelling used throughout the builders.
pub fn log_derivative<K: Scalar>(f: &RatFunc<K>) -> Result<RatFunc<K>, PolyError> {
    f.log_derivative()
}

/// Canonical irreducible fraction of two polynomials.
pub fn reduce_fraction<K: Scalar>(num: Poly<K>, den: Poly<K>) -> Result<RatFunc<K>, PolyError> {
    RatFunc::new(num, den)
}

impl<K: Scalar> Add for &RatFunc<K> {
    type Output = RatFunc<K>;
    fn add(self, rhs: &RatFunc<K>) -> RatFunc<K> {
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        let den = &self.den * &rhs.den;
        RatFunc::new(num, den).expect("nonzero denominator product")
    }
}

impl<K: Scalar> Sub for &RatFunc<K> {
    type Output = RatFunc<K>;
    fn sub(self, rhs: &RatFunc<K>) -> RatFunc<K> {
        let num = &(&self.num * &rhs.den) - &(&rhs.num * &self.den);
        let den = &self.den * &rhs.den;
        RatFunc::new(num, den).expect("nonzero denominator product")
    }
}

impl<K: Scalar> Mul for &RatFunc<K> {
    type Output = RatFunc<K>;
    fn mul(self, rhs: &RatFunc<K>) -> RatFunc<K> {
        RatFunc::new(&self.num * &rhs.num, &self.den * &rhs.den)
            .expect("nonzero denominator product")
    }
}

impl<K: Scalar> Div for &RatFunc<K> {
    type Output = RatFunc<K>;
    fn div(self, rhs: &RatFunc<K>) -> RatFunc<K> {
        assert!(!rhs.is_zero(), "division of rational functions by zero");
        RatFunc::new(&self.num * &rhs.den, &self.den * &rhs.num)
            .expect("nonzero denominator")
    }
}

impl<K: Scalar> Neg for &RatFunc<K> {
    type Output = RatFunc<K>;
    fn neg(self) -> RatFunc<K> {
        RatFunc {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl<K: Scalar> fmt::Display for RatFunc<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "[{}] / [{}]", self.num, self.den)
        }
    }
}

impl<K: Scalar> fmt::Debug for RatFunc<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
