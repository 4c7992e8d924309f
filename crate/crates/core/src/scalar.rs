//! Scalar fields the polynomial engine is generic over.
//!
//! Two concrete scalars carry the whole crate: [`Gauss`], an exact Gaussian
//! rational `a + b i` with `a, b` in Q, and [`Complex64`] for the floating
//! solver lane. `f64` and [`BigRational`] are supported as well so purely
//! real data can stay in the smaller type.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// A field scalar: exact or floating.
///
/// The bound set is what univariate polynomial arithmetic over a field needs.
/// `EXACT` distinguishes the lanes: structural invariants that require exact
/// zero tests (coprimality, monic gcd normalization) are only enforced when
/// it is `true`.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// Whether arithmetic in this scalar is exact.
    const EXACT: bool;

    /// Embed an exact rational.
    fn from_rational(r: &BigRational) -> Self;

    /// Embed a small integer.
    fn from_int(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    /// Approximate magnitude, used for pivot selection and float tolerances.
    fn magnitude(&self) -> f64;

    /// Numeric image of the scalar.
    fn to_complex(&self) -> Complex64;

    /// Multiplicative inverse.
    fn inv(&self) -> Self {
        Self::one() / self.clone()
    }

    /// Square root, when one exists in the scalar. Exact types answer only
    /// for perfect squares of nonnegative rationals.
    fn sqrt(&self) -> Option<Self>;

    /// A unit to multiply a coefficient family by so its entries stay small
    /// (content stripping for exact scalars). `None` means leave it alone.
    /// Euclidean remainder sequences rescale through this hook; without it,
    /// exact coefficient sizes explode.
    fn content_scale(_coeffs: &[Self]) -> Option<Self> {
        None
    }
}

/// `lcm(denominators) / gcd(numerators)` over a family of rationals: the
/// factor turning it into a coprime integer family.
fn rational_content_scale(parts: impl Iterator<Item = BigRational>) -> Option<BigRational> {
    use num_integer::Integer;
    let mut num_gcd = BigInt::zero();
    let mut den_lcm = BigInt::one();
    let mut any = false;
    for r in parts {
        if r.is_zero() {
            continue;
        }
        any = true;
        num_gcd = num_gcd.gcd(r.numer());
        den_lcm = den_lcm.lcm(r.denom());
    }
    if !any || (num_gcd == BigInt::one() && den_lcm == BigInt::one()) {
        return None;
    }
    Some(BigRational::new(den_lcm, num_gcd))
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn magnitude(&self) -> f64 {
        self.to_f64().map(f64::abs).unwrap_or(f64::MAX)
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::MAX), 0.0)
    }
    fn sqrt(&self) -> Option<Self> {
        rational_sqrt(self)
    }

    fn content_scale(coeffs: &[Self]) -> Option<Self> {
        rational_content_scale(coeffs.iter().cloned())
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::MAX)
    }

    fn magnitude(&self) -> f64 {
        self.abs()
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
    fn sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| f64::sqrt(*self))
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(r.to_f64().unwrap_or(f64::MAX), 0.0)
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }
    fn sqrt(&self) -> Option<Self> {
        Some(Complex64::sqrt(*self))
    }
}

/// Exact Gaussian rational `re + im*i`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gauss {
    pub re: BigRational,
    pub im: BigRational,
}

impl Gauss {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Gauss { re, im }
    }

    pub fn from_rational(re: BigRational) -> Self {
        Gauss {
            re,
            im: BigRational::zero(),
        }
    }

    /// `p/q` as a real Gaussian rational.
    pub fn ratio(p: i64, q: i64) -> Self {
        Gauss::from_rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn int(n: i64) -> Self {
        Gauss::ratio(n, 1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Gauss {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// Real part when the value is purely real.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.is_real().then_some(&self.re)
    }

    pub fn conj(&self) -> Self {
        Gauss {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// `re^2 + im^2`, the rational square norm.
    pub fn norm_sq(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

impl fmt::Debug for Gauss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Gauss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        if self.re.is_zero() {
            return write!(f, "{}i", self.im);
        }
        if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, -self.im.clone())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// Failure to read a scalar from its string form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarParseError(pub String);

impl fmt::Display for ScalarParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed scalar: {}", self.0)
    }
}

impl std::error::Error for ScalarParseError {}

fn parse_rational(s: &str) -> Result<BigRational, ScalarParseError> {
    let t = s.trim();
    if t.is_empty() || t == "+" {
        return Ok(BigRational::one());
    }
    if t == "-" {
        return Ok(-BigRational::one());
    }
    let t = t.strip_prefix('+').unwrap_or(t);
    BigRational::from_str(t).map_err(|_| ScalarParseError(s.to_string()))
}

impl FromStr for Gauss {
    type Err = ScalarParseError;

    /// Accepts `p/q`, `p`, `c/di`, and `a/b+c/di` (signs allowed throughout).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(ScalarParseError(s.to_string()));
        }
        let Some(body) = t.strip_suffix('i') else {
            return Ok(Gauss::from_rational(parse_rational(&t)?));
        };
        // Split "a/b+c/d" at the sign that starts the imaginary term: the
        // last +/- preceded by a digit.
        let mut split = None;
        let bytes = body.as_bytes();
        for (idx, &b) in bytes.iter().enumerate().skip(1) {
            if (b == b'+' || b == b'-') && bytes[idx - 1].is_ascii_digit() {
                split = Some(idx);
            }
        }
        match split {
            None => Ok(Gauss::new(BigRational::zero(), parse_rational(body)?)),
            Some(idx) => Ok(Gauss::new(
                parse_rational(&body[..idx])?,
                parse_rational(&body[idx..])?,
            )),
        }
    }
}

impl Zero for Gauss {
    fn zero() -> Self {
        Gauss::new(BigRational::zero(), BigRational::zero())
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for Gauss {
    fn one() -> Self {
        Gauss::from_rational(BigRational::one())
    }
}

impl Neg for Gauss {
    type Output = Gauss;
    fn neg(self) -> Gauss {
        Gauss::new(-self.re, -self.im)
    }
}

impl Add for Gauss {
    type Output = Gauss;
    fn add(self, rhs: Gauss) -> Gauss {
        Gauss::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for Gauss {
    type Output = Gauss;
    fn sub(self, rhs: Gauss) -> Gauss {
        Gauss::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for Gauss {
    type Output = Gauss;
    fn mul(self, rhs: Gauss) -> Gauss {
        Gauss::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Div for Gauss {
    type Output = Gauss;
    fn div(self, rhs: Gauss) -> Gauss {
        let n = rhs.norm_sq();
        assert!(!n.is_zero(), "division of Gaussian rational by zero");
        let c = rhs.conj();
        let p = self * c;
        Gauss::new(p.re / n.clone(), p.im / n)
    }
}

impl Scalar for Gauss {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        Gauss::from_rational(r.clone())
    }

    fn magnitude(&self) -> f64 {
        self.norm_sq().to_f64().unwrap_or(f64::MAX).sqrt()
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::MAX),
            self.im.to_f64().unwrap_or(f64::MAX),
        )
    }
    fn sqrt(&self) -> Option<Self> {
        // (x + y i)^2 = re + im i: x^2 - y^2 = re, 2 x y = im. With
        // n = |self| one has x^2 = (re + n)/2; everything must stay rational.
        if self.im.is_zero() {
            if !self.re.is_negative() {
                return rational_sqrt(&self.re).map(Gauss::from_rational);
            }
            return rational_sqrt(&(-self.re.clone()))
                .map(|y| Gauss::new(BigRational::zero(), y));
        }
        let n = rational_sqrt(&self.norm_sq())?;
        let two = BigRational::from_integer(BigInt::from(2));
        let x = rational_sqrt(&((&self.re + &n) / &two))?;
        if x.is_zero() {
            return None;
        }
        let y = &self.im / &(&x * &two);
        Some(Gauss::new(x, y))
    }

    fn content_scale(coeffs: &[Self]) -> Option<Self> {
        let parts = coeffs
            .iter()
            .flat_map(|g| [g.re.clone(), g.im.clone()]);
        rational_content_scale(parts).map(Gauss::from_rational)
    }
}

/// Exact square root of a rational, when it is a perfect square.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// accepted only when it lands within `tol`. Continued-fraction expansion.
pub fn rational_from_f64(x: f64, max_den: u64, tol: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::from(1), BigInt::from(0), BigInt::from(x.floor() as i64), BigInt::from(1));
    let mut frac = x - x.floor();
    for _ in 0..64 {
        let cand = BigRational::new(p1.clone(), q1.clone());
        if q1 <= BigInt::from(max_den) {
            if let Some(v) = cand.to_f64() {
                if (v - x).abs() <= tol {
                    return Some(cand);
                }
            }
        } else {
            break;
        }
        if frac.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = BigInt::from(a as i64);
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    None
}

/// Rationalization of a complex double into a Gaussian rational.
pub fn gauss_from_complex(c: Complex64, max_den: u64, tol: f64) -> Option<Gauss> {
    Some(Gauss::new(
        rational_from_f64(c.re, max_den, tol)?,
        rational_from_f64(c.im, max_den, tol)?,
    ))
}

/// Deterministic splitmix64 stream, the seed source for randomized tests and
/// the multi-start solver.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[-1, 1]`.
    pub fn next_signed_unit(&mut self) -> f64 {
        (self.next_u64() as f64 / u64::MAX as f64) * 2.0 - 1.0
    }

    /// Uniform integer in `[lo, hi]` inclusive.
    pub fn next_range(&mut self, lo: i64, hi: i64) -> i64 {
        let span = (hi - lo + 1) as u64;
        lo + (self.next_u64() % span) as i64
    }
}
