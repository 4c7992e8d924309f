//! Dense univariate polynomials in `z` over a [`Scalar`] field.
//!
//! Coefficients are stored lowest degree first. Canonical form carries no
//! trailing zero coefficient; the zero polynomial has an empty list and
//! degree `None`.

use crate::scalar::Scalar;
use num_traits::Zero;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, PartialEq)]
pub struct Poly<K: Scalar> {
    coeffs: Vec<K>,
}

/// Arithmetic failure in the polynomial ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyError {
    DivisionByZero,
    InexactDivision,
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyError::DivisionByZero => write!(f, "polynomial division by zero"),
            PolyError::InexactDivision => write!(f, "polynomial division left a remainder"),
        }
    }
}

impl std::error::Error for PolyError {}

impl<K: Scalar> Poly<K> {
    pub fn new(mut coeffs: Vec<K>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(K::one())
    }

    pub fn constant(c: K) -> Self {
        Poly::new(vec![c])
    }

    /// The variable `z`.
    pub fn var() -> Self {
        Poly::new(vec![K::zero(), K::one()])
    }

    /// `c * z^k`.
    pub fn monomial(c: K, k: usize) -> Self {
        let mut coeffs = vec![K::zero(); k + 1];
        coeffs[k] = c;
        Poly::new(coeffs)
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[K]) -> Self {
        let mut p = Poly::one();
        for w in roots {
            p = &p * &Poly::new(vec![-w.clone(), K::one()]);
        }
        p
    }

    pub fn coeffs(&self) -> &[K] {
        &self.coeffs
    }

    /// Coefficient of `z^k`, zero-padded beyond the degree.
    pub fn coeff(&self, k: usize) -> K {
        self.coeffs.get(k).cloned().unwrap_or_else(K::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// Leading coefficient; `None` for zero.
    pub fn leading(&self) -> Option<&K> {
        self.coeffs.last()
    }

    pub fn eval(&self, z: &K) -> K {
        let mut acc = K::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z.clone() + c.clone();
        }
        acc
    }

    pub fn derivative(&self) -> Poly<K> {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.clone() * K::from_int(k as i64))
            .collect();
        Poly::new(coeffs)
    }

    pub fn scale(&self, c: &K) -> Poly<K> {
        Poly::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    pub fn monic(&self) -> Poly<K> {
        match self.leading() {
            None => Poly::zero(),
            Some(lc) => self.scale(&lc.inv()),
        }
    }

    pub fn pow(&self, e: usize) -> Poly<K> {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Coefficient-wise image in another scalar.
    pub fn map<L: Scalar>(&self, f: impl Fn(&K) -> L) -> Poly<L> {
        Poly::new(self.coeffs.iter().map(f).collect())
    }

    /// Euclidean division. The remainder degree is forced below the divisor
    /// degree by explicit truncation, so the loop also terminates for
    /// floating scalars where cancellation is inexact.
    pub fn div_rem(&self, d: &Poly<K>) -> Result<(Poly<K>, Poly<K>), PolyError> {
        let Some(ddeg) = d.degree() else {
            return Err(PolyError::DivisionByZero);
        };
        let mut rem = self.coeffs.clone();
        if rem.len() < d.coeffs.len() {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut quot = vec![K::zero(); rem.len() - ddeg];
        let lc_inv = d.leading().unwrap().inv();
        while rem.len() >= d.coeffs.len() {
            let k = rem.len() - 1 - ddeg;
            let q = rem.last().unwrap().clone() * lc_inv.clone();
            for (j, dc) in d.coeffs.iter().enumerate() {
                let t = rem[k + j].clone() - q.clone() * dc.clone();
                rem[k + j] = t;
            }
            quot[k] = q;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        Ok((Poly::new(quot), Poly::new(rem)))
    }

    /// Division that must leave no remainder.
    pub fn exact_div(&self, d: &Poly<K>) -> Result<Poly<K>, PolyError> {
        let (q, r) = self.div_rem(d)?;
        if r.is_zero() {
            Ok(q)
        } else {
            Err(PolyError::InexactDivision)
        }
    }

    /// Multiplies through by the scalar's content hint, the primitive-PRS
    /// rescaling that keeps exact remainder sequences small.
    fn content_normalized(&self) -> Poly<K> {
        match K::content_scale(&self.coeffs) {
            Some(c) => self.scale(&c),
            None => self.clone(),
        }
    }

    /// Monic greatest common divisor. Meaningful for exact scalars.
    /// Remainders are content-stripped at every step (primitive remainder
    /// sequence), which keeps exact coefficient growth polynomial.
    pub fn gcd(&self, other: &Poly<K>) -> Poly<K> {
        let mut a = self.content_normalized();
        let mut b = other.content_normalized();
        while !b.is_zero() {
            let r = a
                .div_rem(&b)
                .expect("nonzero divisor")
                .1
                .content_normalized();
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Exact square root, when the polynomial is a perfect square and the
    /// leading coefficient has the supplied square root.
    pub fn sqrt_with(&self, lc_root: K) -> Option<Poly<K>> {
        let deg = match self.degree() {
            None => return Some(Poly::zero()),
            Some(d) => d,
        };
        if deg % 2 != 0 {
            return None;
        }
        let half = deg / 2;
        let mut g = vec![K::zero(); half + 1];
        g[half] = lc_root;
        // march down from the top coefficient; each step isolates one unknown
        for k in (0..half).rev() {
            // coefficient of z^{k + half} in g^2, with g[k] still unknown:
            // 2 g[half] g[k] + sum over known pairs
            let target = self.coeff(k + half);
            let mut acc = K::zero();
            for a in 0..=half {
                let b = k + half - a;
                if b <= half && a != k && b != k {
                    acc = acc + g[a].clone() * g[b].clone();
                }
            }
            let two_lead = g[half].clone() + g[half].clone();
            g[k] = (target - acc) / two_lead;
        }
        let cand = Poly::new(g);
        if &(&cand * &cand) == self {
            Some(cand)
        } else {
            None
        }
    }
}

/// `W(f, g) = f' g - f g'`.
pub fn wronskian<K: Scalar>(f: &Poly<K>, g: &Poly<K>) -> Poly<K> {
    &(&f.derivative() * g) - &(f * &g.derivative())
}

/// Monic polynomial with the same roots as `f`, all simple: `f / gcd(f, f')`.
pub fn squarefree_radical<K: Scalar>(f: &Poly<K>) -> Result<Poly<K>, PolyError> {
    if f.is_zero() {
        return Err(PolyError::DivisionByZero);
    }
    let g = f.gcd(&f.derivative());
    Ok(f.exact_div(&g)?.monic())
}

impl<K: Scalar> Add for &Poly<K> {
    type Output = Poly<K>;
    fn add(self, rhs: &Poly<K>) -> Poly<K> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        Poly::new(coeffs)
    }
}

impl<K: Scalar> Sub for &Poly<K> {
    type Output = Poly<K>;
    fn sub(self, rhs: &Poly<K>) -> Poly<K> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect();
        Poly::new(coeffs)
    }
}

impl<K: Scalar> Mul for &Poly<K> {
    type Output = Poly<K>;
    fn mul(self, rhs: &Poly<K>) -> Poly<K> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![K::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                let t = coeffs[i + j].clone() + a.clone() * b.clone();
                coeffs[i + j] = t;
            }
        }
        Poly::new(coeffs)
    }
}

impl<K: Scalar> Neg for &Poly<K> {
    type Output = Poly<K>;
    fn neg(self) -> Poly<K> {
        Poly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl<K: Scalar> fmt::Display for Poly<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})*z")?,
                _ => write!(f, "({c})*z^{k}")?,
            }
        }
        Ok(())
    }
}

impl<K: Scalar> fmt::Debug for Poly<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
