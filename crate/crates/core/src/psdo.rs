//! Differential operators with rational-function coefficients, signed
//! first-order factor chains, and equality of chains with inverse factors
//! via cross-multiplication.
//!
//! A chain stores factors `(a_j, s_j)` representing the ordered product of
//! `(d/dz - a_j)^{s_j}` with `s_j = +-1`. Equality of two chains is decided
//! by normalizing each into `P * Q^{-1}` with `P`, `Q` purely differential
//! (repeatedly rewriting an inverse factor past a direct one through the
//! local cross-multiplied identity) and comparing `P_A Q_B = P_B Q_A`
//! coefficient-wise. This is exactly the manipulation the two-factor
//! exchange identity performs; no formal symbol expansion is involved.

use crate::poly::PolyError;
use crate::ratfunc::RatFunc;
use crate::scalar::Scalar;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum PsdoError {
    Poly(PolyError),
    /// Normalization hit a rewrite it cannot resolve.
    NormalizationStuck,
    MissingTData,
}

impl fmt::Display for PsdoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsdoError::Poly(e) => write!(f, "{e}"),
            PsdoError::NormalizationStuck => {
                write!(f, "factor chain resists normalization to P Q^-1 form")
            }
            PsdoError::MissingTData => write!(f, "spec carries no T data for the factorization"),
        }
    }
}

impl std::error::Error for PsdoError {}

impl From<PolyError> for PsdoError {
    fn from(e: PolyError) -> Self {
        PsdoError::Poly(e)
    }
}

// ---------------------------------------------------------------------------
// Differential operators
// ---------------------------------------------------------------------------

/// `sum_k c_k(z) d^k`, coefficients lowest order first, leading coefficient
/// nonzero in canonical form.
#[derive(Clone, PartialEq)]
pub struct DiffOp<K: Scalar> {
    coeffs: Vec<RatFunc<K>>,
}

impl<K: Scalar> DiffOp<K> {
    pub fn new(mut coeffs: Vec<RatFunc<K>>) -> Self {
        while coeffs.last().is_some_and(RatFunc::is_zero) {
            coeffs.pop();
        }
        DiffOp { coeffs }
    }

    pub fn zero() -> Self {
        DiffOp { coeffs: Vec::new() }
    }

    pub fn identity() -> Self {
        DiffOp {
            coeffs: vec![RatFunc::one()],
        }
    }

    /// The bare derivative `d`.
    pub fn d() -> Self {
        DiffOp {
            coeffs: vec![RatFunc::zero(), RatFunc::one()],
        }
    }

    /// Multiplication operator by a rational function.
    pub fn mul_by(f: RatFunc<K>) -> Self {
        DiffOp::new(vec![f])
    }

    /// `d - a`.
    pub fn first_order(a: &RatFunc<K>) -> Self {
        DiffOp::new(vec![-a, RatFunc::one()])
    }

    pub fn order(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, k: usize) -> RatFunc<K> {
        self.coeffs.get(k).cloned().unwrap_or_else(RatFunc::zero)
    }

    pub fn coeffs(&self) -> &[RatFunc<K>] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &DiffOp<K>) -> DiffOp<K> {
        let n = self.coeffs.len().max(other.coeffs.len());
        DiffOp::new((0..n).map(|k| &self.coeff(k) + &other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &DiffOp<K>) -> DiffOp<K> {
        let n = self.coeffs.len().max(other.coeffs.len());
        DiffOp::new((0..n).map(|k| &self.coeff(k) - &other.coeff(k)).collect())
    }
}

/// Noncommutative product with `d o f = f d + f'`: Leibniz expansion
/// `d^i o b = sum_s C(i, s) b^{(s)} d^{i-s}`.
pub fn compose<K: Scalar>(a: &DiffOp<K>, b: &DiffOp<K>) -> DiffOp<K> {
    if a.is_zero() || b.is_zero() {
        return DiffOp::zero();
    }
    let ord = a.coeffs.len() + b.coeffs.len() - 2;
    let mut out = vec![RatFunc::<K>::zero(); ord + 1];
    for (i, ai) in a.coeffs.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.coeffs.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            // binomial coefficients built incrementally: C(i, s)
            let mut binom = K::one();
            let mut deriv = bj.clone();
            for s in 0..=i {
                let term = &(ai * &deriv) * &RatFunc::constant(binom.clone());
                out[i - s + j] = &out[i - s + j] + &term;
                if s == i {
                    break;
                }
                binom = binom * K::from_int((i - s) as i64) / K::from_int((s + 1) as i64);
                deriv = deriv.derivative();
            }
        }
    }
    DiffOp::new(out)
}

impl<K: Scalar> fmt::Display for DiffOp<K> {
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
                1 => write!(f, "({c})*d")?,
                _ => write!(f, "({c})*d^{k}")?,
            }
        }
        Ok(())
    }
}

impl<K: Scalar> fmt::Debug for DiffOp<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

// ---------------------------------------------------------------------------
// Factor chains
// ---------------------------------------------------------------------------

/// Ordered product of `(d - a_j)^{s_j}`, `s_j = +-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorChain<K: Scalar> {
    factors: Vec<(RatFunc<K>, i8)>,
}

impl<K: Scalar> FactorChain<K> {
    pub fn new(factors: Vec<(RatFunc<K>, i8)>) -> Self {
        assert!(
            factors.iter().all(|(_, s)| *s == 1 || *s == -1),
            "factor signs must be +-1"
        );
        FactorChain { factors }
    }

    pub fn identity() -> Self {
        FactorChain {
            factors: Vec::new(),
        }
    }

    pub fn factors(&self) -> &[(RatFunc<K>, i8)] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Normal form `P * Q^{-1}`: all direct factors composed into `P`, all
    /// inverse factors into `Q` (reversed, since
    /// `(d-c_1)^-1 (d-c_2)^-1 = [(d-c_2)(d-c_1)]^-1`).
    ///
    /// Inverse-before-direct patterns are removed by cancellation when the
    /// contents agree and otherwise by the local rewrite
    /// `(d-a)^-1 (d-b) = (d-x)(d-y)^-1` with
    /// `x = (b^2 - ab + a')/(b - a)` and `y = a + x - b`, the unique
    /// first-order solution of the cross-multiplied identity
    /// `(d-b)(d-y) = (d-a)(d-x)`.
    pub fn normalize(&self) -> Result<(DiffOp<K>, DiffOp<K>), PsdoError> {
        let mut factors = self.factors.clone();
        loop {
            let mut changed = false;
            let mut k = 0;
            while k + 1 < factors.len() {
                let (ref a, sa) = factors[k];
                let (ref b, sb) = factors[k + 1];
                if sa != sb && a == b {
                    // (d-a)(d-a)^-1 and (d-a)^-1(d-a) both cancel
                    factors.drain(k..k + 2);
                    changed = true;
                    break;
                }
                if sa == -1 && sb == 1 {
                    let diff = &(b - a);
                    let x = &(&(&(b * b) - &(a * b)) + &a.derivative()) / diff;
                    let y = &(a + &x) - b;
                    factors[k] = (x, 1);
                    factors[k + 1] = (y, -1);
                    changed = true;
                    break;
                }
                k += 1;
            }
            if !changed {
                break;
            }
        }
        let mut p = DiffOp::identity();
        let mut q = DiffOp::identity();
        for (a, s) in &factors {
            match s {
                1 => p = compose(&p, &DiffOp::first_order(a)),
                -1 => q = compose(&DiffOp::first_order(a), &q),
                _ => return Err(PsdoError::NormalizationStuck),
            }
        }
        // a direct factor after the loop would mean normalization failed
        let mut seen_inverse = false;
        for (_, s) in &factors {
            if *s == -1 {
                seen_inverse = true;
            } else if seen_inverse {
                return Err(PsdoError::NormalizationStuck);
            }
        }
        Ok((p, q))
    }
}

/// Equality of two chains as pseudo-differential operators: both are put in
/// `P Q^{-1}` form and `P_A Q_B` is compared with `P_B Q_A`.
pub fn chains_equal<K: Scalar>(
    a: &FactorChain<K>,
    b: &FactorChain<K>,
) -> Result<bool, PsdoError> {
    let (pa, qa) = a.normalize()?;
    let (pb, qb) = b.normalize()?;
    Ok(compose(&pa, &qb) == compose(&pb, &qa))
}

// ---------------------------------------------------------------------------
// The R(z) factorization for sl(n|m) data
// ---------------------------------------------------------------------------

use crate::qqsystem::{QqError, QqSolution, QqSpec};
use crate::rootdata::Parity;

/// The signed factor chain `prod_i (d - s_i ln'[T_i q_+^{i-1}/q_+^i])^{s_i}`
/// with `s_i = +1` on even word positions and `-1` on odd ones, boundaries
/// `q_+^0 = q_+^{n+m} = 1`. Factors are stored as `(s_i l_i, s_i)` so one
/// convention covers both products.
pub fn build_r<K: Scalar>(
    spec: &QqSpec<K>,
    sol: &QqSolution<K>,
) -> Result<FactorChain<K>, QqError> {
    let word = spec
        .diagram()
        .parity_word()
        .ok_or(QqError::MissingFamilyData("parity word"))?
        .to_vec();
    let t = spec.t_data().ok_or(QqError::MissingFamilyData("T"))?;
    let q_plus = sol.q_plus_vec();
    build_r_parts(&word, t, &q_plus)
}

/// `build_r` from raw parts; used by the reproduction step before a full
/// solution object exists.
pub fn build_r_parts<K: Scalar>(
    word: &[Parity],
    t: &[crate::poly::Poly<K>],
    q_plus: &[crate::poly::Poly<K>],
) -> Result<FactorChain<K>, QqError> {
    if t.len() != word.len() || q_plus.len() + 1 != word.len() {
        return Err(QqError::LengthMismatch {
            expected: word.len(),
            got: t.len(),
        });
    }
    let boundary_one = crate::poly::Poly::<K>::one();
    let at = |pos: usize| -> &crate::poly::Poly<K> {
        if pos == 0 || pos > q_plus.len() {
            &boundary_one
        } else {
            &q_plus[pos - 1]
        }
    };
    let mut factors = Vec::with_capacity(word.len());
    for (k, parity) in word.iter().enumerate() {
        let i = k + 1;
        let num = &t[k] * at(i - 1);
        let content = RatFunc::new(num, at(i).clone())?;
        let ell = content.log_derivative()?;
        let (a, s) = match parity {
            Parity::Even => (ell, 1),
            Parity::Odd => (-&ell, -1),
        };
        factors.push((a, s));
    }
    Ok(FactorChain::new(factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::scalar::{Gauss, SplitMix64};

    type R = RatFunc<Gauss>;

    fn p(coeffs: &[i64]) -> Poly<Gauss> {
        Poly::new(coeffs.iter().map(|&c| Gauss::int(c)).collect())
    }

    fn rf(num: &[i64], den: &[i64]) -> R {
        R::new(p(num), p(den)).unwrap()
    }

    fn random_ratfunc_deg(rng: &mut SplitMix64, dmax: i64) -> R {
        let num = Poly::new(
            (0..=rng.next_range(0, dmax))
                .map(|_| Gauss::int(rng.next_range(-3, 3)))
                .collect(),
        );
        let mut den = Poly::new(
            (0..=rng.next_range(0, dmax))
                .map(|_| Gauss::int(rng.next_range(-3, 3)))
                .collect(),
        );
        if den.is_zero() {
            den = Poly::one();
        }
        R::new(num, den).unwrap()
    }

    fn random_ratfunc(rng: &mut SplitMix64) -> R {
        random_ratfunc_deg(rng, 2)
    }

    #[test]
    fn leibniz_rule() {
        // d o z = z d + 1
        let z = R::from_poly(Poly::var());
        let prod = compose(&DiffOp::d(), &DiffOp::mul_by(z.clone()));
        assert_eq!(prod.coeff(1), z);
        assert_eq!(prod.coeff(0), R::one());
    }

    #[test]
    fn first_order_product_expansion() {
        // (d - a)(d - b) = d^2 - (a+b) d + (ab - b')
        let a = rf(&[0, 1], &[1]); // z
        let b = rf(&[1], &[0, 1]); // 1/z
        let prod = compose(&DiffOp::first_order(&a), &DiffOp::first_order(&b));
        assert_eq!(prod.coeff(2), R::one());
        assert_eq!(prod.coeff(1), -&(&a + &b));
        assert_eq!(prod.coeff(0), &(&a * &b) - &b.derivative());
    }

    #[test]
    fn commutator_with_multiplication_is_derivative() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..100 {
            let f = random_ratfunc(&mut rng);
            let mf = DiffOp::mul_by(f.clone());
            let lhs = compose(&DiffOp::d(), &mf).sub(&compose(&mf, &DiffOp::d()));
            assert_eq!(lhs, DiffOp::mul_by(f.derivative()));
        }
    }

    #[test]
    fn composition_is_associative() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..25 {
            let ops: Vec<DiffOp<Gauss>> = (0..3)
                .map(|_| {
                    DiffOp::new(vec![
                        random_ratfunc_deg(&mut rng, 1),
                        random_ratfunc_deg(&mut rng, 1),
                        random_ratfunc_deg(&mut rng, 1),
                    ])
                })
                .collect();
            let left = compose(&compose(&ops[0], &ops[1]), &ops[2]);
            let right = compose(&ops[0], &compose(&ops[1], &ops[2]));
            assert_eq!(left, right);
        }
    }

    #[test]
    fn identity_is_neutral() {
        let a = DiffOp::new(vec![rf(&[1], &[0, 1]), R::one()]);
        assert_eq!(compose(&a, &DiffOp::identity()), a);
        assert_eq!(compose(&DiffOp::identity(), &a), a);
    }

    #[test]
    fn cancelling_pair_equals_identity() {
        let a = rf(&[0, 1], &[1]);
        let chain = FactorChain::new(vec![(a.clone(), 1), (a.clone(), -1)]);
        assert!(chains_equal(&chain, &FactorChain::identity()).unwrap());
        // and the reversed (inverse first) order too
        let chain = FactorChain::new(vec![(a.clone(), -1), (a, 1)]);
        assert!(chains_equal(&chain, &FactorChain::identity()).unwrap());
    }

    #[test]
    fn distinct_first_order_factors_differ() {
        let a = FactorChain::new(vec![(rf(&[0, 1], &[1]), 1)]);
        let b = FactorChain::new(vec![(rf(&[1, 1], &[1]), 1)]);
        assert!(!chains_equal(&a, &b).unwrap());
        assert!(chains_equal(&a, &a).unwrap());
    }

    #[test]
    fn insertion_of_cancelling_pair_is_invariant() {
        let mut rng = SplitMix64::new(9);
        for _ in 0..20 {
            let base = FactorChain::new(vec![
                (random_ratfunc(&mut rng), 1),
                (random_ratfunc(&mut rng), -1),
            ]);
            let c = random_ratfunc(&mut rng);
            let mut padded = base.factors().to_vec();
            padded.insert(1, (c.clone(), -1));
            padded.insert(1, (c, 1));
            let padded = FactorChain::new(padded);
            assert!(chains_equal(&base, &padded).unwrap());
        }
    }

    #[test]
    fn chain_equality_is_reflexive_and_symmetric() {
        let mut rng = SplitMix64::new(13);
        for _ in 0..10 {
            let a = FactorChain::new(vec![
                (random_ratfunc(&mut rng), 1),
                (random_ratfunc(&mut rng), -1),
            ]);
            let b = FactorChain::new(vec![
                (random_ratfunc(&mut rng), 1),
                (random_ratfunc(&mut rng), -1),
            ]);
            assert!(chains_equal(&a, &a).unwrap());
            assert_eq!(
                chains_equal(&a, &b).unwrap(),
                chains_equal(&b, &a).unwrap()
            );
        }
    }

    #[test]
    fn local_rewrite_swaps_inverse_past_direct() {
        // (d + 1/z)^-1 d = (d - 1/z) d^-1
        let chain = FactorChain::new(vec![(rf(&[-1], &[0, 1]), -1), (R::zero(), 1)]);
        let (p_norm, q_norm) = chain.normalize().unwrap();
        assert_eq!(p_norm, DiffOp::first_order(&rf(&[1], &[0, 1])));
        assert_eq!(q_norm, DiffOp::d());
        let direct = FactorChain::new(vec![(rf(&[1], &[0, 1]), 1), (R::zero(), -1)]);
        assert!(chains_equal(&chain, &direct).unwrap());
    }

    #[test]
    fn sl11_factorization_shape() {
        use crate::qqsystem::{build_slnm_spec, QqPair, QqSolution};
        use crate::rootdata::{DynkinDiagram, Family};
        use std::sync::Arc;
        // T = (z, 1), trivial pair q_+ = q_- = 1
        let diagram = Arc::new(DynkinDiagram::build(Family::Gl11).unwrap());
        let spec = build_slnm_spec(vec![p(&[0, 1]), p(&[1])], diagram).unwrap();
        let sol = QqSolution::new(vec![QqPair::new(p(&[1]), p(&[1])).unwrap()]);
        let chain = build_r(&spec, &sol).unwrap();
        assert_eq!(chain.len(), 2);
        // factor 1: (d - ln' z), factor 2: (d + ln' 1)^-1 = d^-1
        assert_eq!(chain.factors()[0], (rf(&[1], &[0, 1]), 1));
        assert_eq!(chain.factors()[1], (R::zero(), -1));
    }

    #[test]
    fn pure_even_chain_composes_to_pinned_operator() {
        use crate::qqsystem::{build_slnm_spec, QqPair, QqSolution};
        use crate::rootdata::{DynkinDiagram, Family};
        use std::sync::Arc;
        // sl(2|0): T = (z, 1), q_+ = z - 1
        let diagram = Arc::new(DynkinDiagram::build(Family::Slnm { n: 2, m: 0 }).unwrap());
        let spec = build_slnm_spec(vec![p(&[0, 1]), p(&[1])], diagram).unwrap();
        let sol = QqSolution::new(vec![QqPair::new(p(&[-1, 1]), p(&[1])).unwrap()]);
        let chain = build_r(&spec, &sol).unwrap();
        assert_eq!(chain.len(), 2);
        assert!(chain.factors().iter().all(|(_, s)| *s == 1));
        let (p_norm, q_norm) = chain.normalize().unwrap();
        assert_eq!(q_norm, DiffOp::identity());
        // (d - ln'[z/(z-1)])(d - ln'[z-1]) expanded once and pinned:
        // coefficient of d: -(ln' z) ; constant: ln'[z/(z-1)] ln'[z-1] - (ln'[z-1])'
        let l1 = rf(&[-1], &[0, -1, 1]); // ln'[z/(z-1)] = 1/z - 1/(z-1)
        let l2 = rf(&[1], &[-1, 1]);
        assert_eq!(p_norm.coeff(2), R::one());
        assert_eq!(p_norm.coeff(1), -&(&l1 + &l2));
        assert_eq!(p_norm.coeff(0), &(&l1 * &l2) - &l2.derivative());
    }
}
