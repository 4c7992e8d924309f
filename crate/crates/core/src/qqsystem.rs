//! System instances for a diagram + twist + source data, residual evaluation
//! for the qq- and pq-forms, nondegeneracy reports, and the family builders.
//!
//! A [`QqSpec`] fixes the diagram, the twist coordinates and one source per
//! node: an `L` rational function at white/black nodes, a polynomial (or a
//! deferred family formula) at grey nodes. Deferred grey sources depend on
//! the candidate solution's `q_plus` data and are resolved at residual time.
//!
//! Everything is generic over the scalar so the exact lane (verification)
//! and the complex lane (the Bethe solver) share one code path.

use crate::linalg;
use crate::poly::{squarefree_radical, wronskian, Poly, PolyError};
use crate::ratfunc::RatFunc;
use crate::rootdata::{DynkinDiagram, NodeColor, RootError, TwistZ};
use crate::scalar::{Gauss, Scalar};
use crate::Rat;
use num_traits::{ToPrimitive, Zero};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum QqError {
    Root(RootError),
    Poly(PolyError),
    Linear(linalg::LinError),
    GreyNodePassed(usize),
    EvenNodePassed(usize),
    NonIntegralBlackExponent { node: usize, with: usize },
    NonIntegralExponent { node: usize, with: usize },
    NonPolynomialGreySource(usize),
    UnresolvableSource(usize),
    MissingFamilyData(&'static str),
    WrongFamily(&'static str),
    LengthMismatch { expected: usize, got: usize },
    ZeroPolynomial(usize),
    ZeroGreyFraction(usize),
    PairNotCoprime(usize),
    MissingQData(usize),
    NotASquare(usize),
}

impl fmt::Display for QqError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QqError::Root(e) => write!(f, "{e}"),
            QqError::Poly(e) => write!(f, "{e}"),
            QqError::Linear(e) => write!(f, "{e}"),
            QqError::GreyNodePassed(n) => write!(f, "node {n} is grey; an even node is required"),
            QqError::EvenNodePassed(n) => write!(f, "node {n} is even; a grey node is required"),
            QqError::NonIntegralBlackExponent { node, with } => {
                write!(f, "non-integral black exponent at node {node} against node {with}")
            }
            QqError::NonIntegralExponent { node, with } => {
                write!(f, "non-integral exponent at node {node} against node {with}")
            }
            QqError::NonPolynomialGreySource(n) => {
                write!(f, "non-polynomial grey source at node {n}")
            }
            QqError::UnresolvableSource(n) => write!(f, "unresolvable deferred source at node {n}"),
            QqError::MissingFamilyData(w) => write!(f, "spec carries no {w} data"),
            QqError::WrongFamily(w) => write!(f, "diagram family does not support {w}"),
            QqError::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} entries, got {got}")
            }
            QqError::ZeroPolynomial(n) => write!(f, "zero polynomial at node {n}"),
            QqError::ZeroGreyFraction(n) => {
                write!(f, "vanishing grey fraction q at node {n} raised to a negative power")
            }
            QqError::PairNotCoprime(n) => write!(f, "pair at node {n} shares a root"),
            QqError::MissingQData(n) => write!(f, "node {n} carries no q data"),
            QqError::NotASquare(n) => {
                write!(f, "black-node source at node {n} is not a perfect square")
            }
        }
    }
}

impl std::error::Error for QqError {}

impl From<RootError> for QqError {
    fn from(e: RootError) -> Self {
        QqError::Root(e)
    }
}

impl From<PolyError> for QqError {
    fn from(e: PolyError) -> Self {
        QqError::Poly(e)
    }
}

impl From<linalg::LinError> for QqError {
    fn from(e: linalg::LinError) -> Self {
        QqError::Linear(e)
    }
}

// ---------------------------------------------------------------------------
// Sources and the spec
// ---------------------------------------------------------------------------

/// Grey-node source: an explicit polynomial, or a family formula resolved
/// against the candidate solution at residual time.
#[derive(Debug, Clone, PartialEq)]
pub enum GreySource<K: Scalar> {
    Explicit(Poly<K>),
    /// `ln'(T_i T_{i+1} q_+^{i-1} / q_+^{i+1}) pi_i q_+^{i+1} q_+^{i-1}`,
    /// `pi_i` the radical of `T_i T_{i+1}`, boundaries `q_+^0 = q_+^{n+m} = 1`.
    DeferredSlnm,
    /// `ln'(Lambda_i prod_j q_+^{j,-c_ij}) pi_i prod_{c_ij != 0} q_+^j`,
    /// `pi_i` the radical of `Lambda_i`.
    DeferredOsp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeSource<K: Scalar> {
    /// White/black node: the `L` function, plus an optional polynomial for
    /// the pq product equation (defaults to the reduction `q_+^i` when absent).
    Even {
        l: RatFunc<K>,
        lambda_tilde: Option<Poly<K>>,
    },
    Grey(GreySource<K>),
}

/// A qq/pq-system instance: diagram, twist coordinates, one source per node,
/// and optional family data backing deferred grey sources.
#[derive(Debug, Clone, PartialEq)]
pub struct QqSpec<K: Scalar> {
    diagram: Arc<DynkinDiagram>,
    zetas: Vec<K>,
    sources: Vec<NodeSource<K>>,
    /// sl(n|m) data `T_1..T_{n+m}`.
    t_data: Option<Vec<Poly<K>>>,
    /// osp data `Lambda_1..Lambda_r`.
    osp_lambda: Option<Vec<Poly<K>>>,
    /// Grey nodes whose family source degenerates for every solution.
    degenerate_grey: Vec<usize>,
}

impl<K: Scalar> QqSpec<K> {
    pub fn new(
        diagram: Arc<DynkinDiagram>,
        zetas: Vec<K>,
        sources: Vec<NodeSource<K>>,
    ) -> Result<Self, QqError> {
        let rank = diagram.rank();
        if zetas.len() != rank {
            return Err(QqError::LengthMismatch {
                expected: rank,
                got: zetas.len(),
            });
        }
        if sources.len() != rank {
            return Err(QqError::LengthMismatch {
                expected: rank,
                got: sources.len(),
            });
        }
        for node in diagram.nodes() {
            let grey = diagram.color(node)? == NodeColor::Grey;
            match (&sources[node - 1], grey) {
                (NodeSource::Even { .. }, true) => return Err(QqError::EvenNodePassed(node)),
                (NodeSource::Grey(_), false) => return Err(QqError::GreyNodePassed(node)),
                _ => {}
            }
        }
        Ok(QqSpec {
            diagram,
            zetas,
            sources,
            t_data: None,
            osp_lambda: None,
            degenerate_grey: Vec::new(),
        })
    }

    pub fn diagram(&self) -> &Arc<DynkinDiagram> {
        &self.diagram
    }

    pub fn zetas(&self) -> &[K] {
        &self.zetas
    }

    pub fn zeta(&self, node: usize) -> &K {
        &self.zetas[node - 1]
    }

    pub fn sources(&self) -> &[NodeSource<K>] {
        &self.sources
    }

    pub fn source(&self, node: usize) -> &NodeSource<K> {
        &self.sources[node - 1]
    }

    pub fn t_data(&self) -> Option<&[Poly<K>]> {
        self.t_data.as_deref()
    }

    pub fn osp_lambda(&self) -> Option<&[Poly<K>]> {
        self.osp_lambda.as_deref()
    }

    pub fn degenerate_grey(&self) -> &[usize] {
        &self.degenerate_grey
    }

    pub fn with_zetas(mut self, zetas: Vec<K>) -> Result<Self, QqError> {
        if zetas.len() != self.diagram.rank() {
            return Err(QqError::LengthMismatch {
                expected: self.diagram.rank(),
                got: zetas.len(),
            });
        }
        self.zetas = zetas;
        Ok(self)
    }

    pub fn with_t_data(mut self, t: Vec<Poly<K>>) -> Self {
        self.t_data = Some(t);
        self
    }

    /// `<alpha_node, Z>` in the working scalar.
    pub fn pairing(&self, node: usize) -> Result<K, QqError> {
        let mut acc = K::zero();
        for j in self.diagram.nodes() {
            let a_ji = self.diagram.cartan(j, node)?.clone();
            let weight = match self.diagram.color(j)? {
                NodeColor::Black => a_ji / Rat::from_integer(2.into()),
                _ => a_ji,
            };
            acc = acc + self.zetas[j - 1].clone() * K::from_rational(&weight);
        }
        Ok(acc)
    }

    /// Coefficient-wise image in another scalar.
    pub fn map<L: Scalar>(&self, f: &impl Fn(&K) -> L) -> QqSpec<L> {
        QqSpec {
            diagram: self.diagram.clone(),
            zetas: self.zetas.iter().map(f).collect(),
            sources: self
                .sources
                .iter()
                .map(|s| match s {
                    NodeSource::Even { l, lambda_tilde } => NodeSource::Even {
                        l: l.map(f),
                        lambda_tilde: lambda_tilde.as_ref().map(|p| p.map(f)),
                    },
                    NodeSource::Grey(GreySource::Explicit(p)) => {
                        NodeSource::Grey(GreySource::Explicit(p.map(f)))
                    }
                    NodeSource::Grey(GreySource::DeferredSlnm) => {
                        NodeSource::Grey(GreySource::DeferredSlnm)
                    }
                    NodeSource::Grey(GreySource::DeferredOsp) => {
                        NodeSource::Grey(GreySource::DeferredOsp)
                    }
                })
                .collect(),
            t_data: self
                .t_data
                .as_ref()
                .map(|ts| ts.iter().map(|p| p.map(f)).collect()),
            osp_lambda: self
                .osp_lambda
                .as_ref()
                .map(|ls| ls.iter().map(|p| p.map(f)).collect()),
            degenerate_grey: self.degenerate_grey.clone(),
        }
    }
}

impl QqSpec<Gauss> {
    /// Spec over the exact scalar with the twist taken from root data.
    pub fn from_twist(twist: &TwistZ, sources: Vec<NodeSource<Gauss>>) -> Result<Self, QqError> {
        QqSpec::new(twist.diagram().clone(), twist.zetas().to_vec(), sources)
    }

    /// Complex image for the floating solver lane.
    pub fn to_complex(&self) -> QqSpec<num_complex::Complex64> {
        self.map(&|g: &Gauss| g.to_complex())
    }
}

// ---------------------------------------------------------------------------
// Solutions
// ---------------------------------------------------------------------------

/// One `(q_+, q_-)` pair. Construction normalizes `q_+` monic by the
/// residual-preserving reciprocal scaling `(q_+, q_-) -> (q_+/c, c q_-)`.
///
/// Coprimality of the pair is a nondegeneracy clause, reported by
/// [`check_nondegenerate`] rather than enforced here, so tampered candidate
/// data still flows to residual evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct QqPair<K: Scalar> {
    q_plus: Poly<K>,
    q_minus: Poly<K>,
}

impl<K: Scalar> QqPair<K> {
    pub fn new(q_plus: Poly<K>, q_minus: Poly<K>) -> Result<Self, QqError> {
        let Some(lc) = q_plus.leading().cloned() else {
            return Err(QqError::ZeroPolynomial(0));
        };
        Ok(QqPair {
            q_plus: q_plus.scale(&lc.inv()),
            q_minus: q_minus.scale(&lc),
        })
    }

    pub fn q_plus(&self) -> &Poly<K> {
        &self.q_plus
    }

    pub fn q_minus(&self) -> &Poly<K> {
        &self.q_minus
    }

    /// `q = q_- / q_+` as a rational function.
    pub fn fraction(&self) -> RatFunc<K> {
        RatFunc::new(self.q_minus.clone(), self.q_plus.clone()).expect("monic denominator")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QqSolution<K: Scalar> {
    nodes: Vec<QqPair<K>>,
}

impl<K: Scalar> QqSolution<K> {
    pub fn new(nodes: Vec<QqPair<K>>) -> Self {
        QqSolution { nodes }
    }

    pub fn nodes(&self) -> &[QqPair<K>] {
        &self.nodes
    }

    pub fn pair(&self, node: usize) -> &QqPair<K> {
        &self.nodes[node - 1]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn q_plus_vec(&self) -> Vec<Poly<K>> {
        self.nodes.iter().map(|p| p.q_plus.clone()).collect()
    }

    pub fn map<L: Scalar>(&self, f: &impl Fn(&K) -> L) -> QqSolution<L> {
        QqSolution {
            nodes: self
                .nodes
                .iter()
                .map(|p| QqPair {
                    q_plus: p.q_plus.map(f),
                    q_minus: p.q_minus.map(f),
                })
                .collect(),
        }
    }
}

/// Per-node data of a pq-solution. `p_-` is normalized monic (reciprocal
/// scaling into `p_+`); the q pair is optional at grey nodes, where the
/// system has no differential equation.
#[derive(Debug, Clone, PartialEq)]
pub struct PqNode<K: Scalar> {
    p_plus: Poly<K>,
    p_minus: Poly<K>,
    q: Option<QqPair<K>>,
}

impl<K: Scalar> PqNode<K> {
    pub fn new(p_plus: Poly<K>, p_minus: Poly<K>, q: Option<QqPair<K>>) -> Result<Self, QqError> {
        let Some(lc) = p_minus.leading().cloned() else {
            return Err(QqError::ZeroPolynomial(0));
        };
        Ok(PqNode {
            p_plus: p_plus.scale(&lc),
            p_minus: p_minus.scale(&lc.inv()),
            q,
        })
    }

    pub fn p_plus(&self) -> &Poly<K> {
        &self.p_plus
    }

    pub fn p_minus(&self) -> &Poly<K> {
        &self.p_minus
    }

    pub fn q(&self) -> Option<&QqPair<K>> {
        self.q.as_ref()
    }

    /// `p = p_- / p_+`.
    pub fn fraction(&self) -> Result<RatFunc<K>, QqError> {
        if self.p_plus.is_zero() {
            return Err(QqError::ZeroPolynomial(0));
        }
        Ok(RatFunc::new(self.p_minus.clone(), self.p_plus.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PqSolution<K: Scalar> {
    nodes: Vec<PqNode<K>>,
}

impl<K: Scalar> PqSolution<K> {
    pub fn new(nodes: Vec<PqNode<K>>) -> Self {
        PqSolution { nodes }
    }

    pub fn nodes(&self) -> &[PqNode<K>] {
        &self.nodes
    }

    pub fn node(&self, node: usize) -> &PqNode<K> {
        &self.nodes[node - 1]
    }
}

// ---------------------------------------------------------------------------
// Deferred sources and F_i
// ---------------------------------------------------------------------------

fn rat_to_i64(r: &Rat) -> Option<i64> {
    if r.is_integer() {
        r.to_integer().to_i64()
    } else {
        None
    }
}

/// `q_+^{pos}` with the boundary convention `q_+^0 = q_+^{rank+1} = 1` used
/// by the sl(n|m) formulas.
fn q_plus_at<K: Scalar>(q_plus: &[Poly<K>], pos: usize) -> Poly<K> {
    if pos == 0 || pos > q_plus.len() {
        Poly::one()
    } else {
        q_plus[pos - 1].clone()
    }
}


/// Extracts the polynomial value of a fraction that is polynomial by
/// construction. Exact scalars reduce structurally; floating scalars divide
/// out the denominator and tolerate roundoff in the remainder.
fn fraction_to_poly<K: Scalar>(f: &RatFunc<K>, node: usize) -> Result<Poly<K>, QqError> {
    if let Some(p) = f.as_poly() {
        return Ok(p.clone());
    }
    if K::EXACT {
        return Err(QqError::NonPolynomialGreySource(node));
    }
    let (quot, rem) = f.num().div_rem(f.den())?;
    let scale = f
        .num()
        .coeffs()
        .iter()
        .map(Scalar::magnitude)
        .fold(1.0, f64::max);
    if rem.coeffs().iter().all(|c| c.magnitude() <= 1e-6 * scale) {
        Ok(quot)
    } else {
        Err(QqError::NonPolynomialGreySource(node))
    }
}

/// Resolves the grey source at `node` against candidate `q_plus` data.
pub fn resolve_grey_source<K: Scalar>(
    spec: &QqSpec<K>,
    q_plus: &[Poly<K>],
    node: usize,
) -> Result<Poly<K>, QqError> {
    let diagram = spec.diagram();
    if diagram.color(node)? != NodeColor::Grey {
        return Err(QqError::EvenNodePassed(node));
    }
    let NodeSource::Grey(source) = spec.source(node) else {
        return Err(QqError::UnresolvableSource(node));
    };
    match source {
        GreySource::Explicit(p) => Ok(p.clone()),
        GreySource::DeferredSlnm => {
            let t = spec.t_data().ok_or(QqError::MissingFamilyData("T"))?;
            if t.len() != diagram.rank() + 1 {
                return Err(QqError::LengthMismatch {
                    expected: diagram.rank() + 1,
                    got: t.len(),
                });
            }
            let tt = &t[node - 1] * &t[node];
            if tt.is_zero() {
                return Err(QqError::ZeroPolynomial(node));
            }
            let prev = q_plus_at(q_plus, node - 1);
            let next = q_plus_at(q_plus, node + 1);
            if prev.is_zero() || next.is_zero() {
                return Err(QqError::ZeroPolynomial(node));
            }
            let pi = squarefree_radical(&tt)?;
            let arg = RatFunc::new(&tt * &prev, next.clone())?;
            let ld = arg.log_derivative()?;
            let result = &ld * &RatFunc::from_poly(&(&pi * &next) * &prev);
            fraction_to_poly(&result, node)
        }
        GreySource::DeferredOsp => {
            let lambdas = spec
                .osp_lambda()
                .ok_or(QqError::MissingFamilyData("Lambda"))?;
            if lambdas.len() != diagram.rank() {
                return Err(QqError::LengthMismatch {
                    expected: diagram.rank(),
                    got: lambdas.len(),
                });
            }
            let lambda = &lambdas[node - 1];
            if lambda.is_zero() {
                return Err(QqError::ZeroPolynomial(node));
            }
            let mut arg = RatFunc::from_poly(lambda.clone());
            let mut tail = squarefree_radical(lambda)?;
            for j in diagram.nodes() {
                let c_ij = diagram.cartan(node, j)?;
                if c_ij.is_zero() {
                    continue;
                }
                let e =
                    rat_to_i64(c_ij).ok_or(QqError::NonIntegralExponent { node, with: j })?;
                let qj = q_plus_at(q_plus, j);
                if qj.is_zero() {
                    return Err(QqError::ZeroPolynomial(j));
                }
                arg = &arg * &RatFunc::from_poly(qj.clone()).powi(-e)?;
                tail = &tail * &qj;
            }
            let result = &arg.log_derivative()? * &RatFunc::from_poly(tail);
            fraction_to_poly(&result, node)
        }
    }
}

/// The grey fractions `q^j = q_-^j / q_+^j` used inside `F_i`, taken from an
/// explicit solution.
fn grey_fractions<K: Scalar>(
    spec: &QqSpec<K>,
    sol: &QqSolution<K>,
) -> Result<Vec<Option<RatFunc<K>>>, QqError> {
    let diagram = spec.diagram();
    let mut out = Vec::with_capacity(diagram.rank());
    for node in diagram.nodes() {
        if diagram.color(node)? == NodeColor::Grey {
            out.push(Some(sol.pair(node).fraction()));
        } else {
            out.push(None);
        }
    }
    Ok(out)
}

/// `F_node` from candidate data: `q_plus` per node plus the grey fractions.
pub fn build_f_parts<K: Scalar>(
    spec: &QqSpec<K>,
    q_plus: &[Poly<K>],
    grey_q: &[Option<RatFunc<K>>],
    node: usize,
) -> Result<RatFunc<K>, QqError> {
    let diagram = spec.diagram();
    let color = diagram.color(node)?;
    let l = match spec.source(node) {
        NodeSource::Even { l, .. } => l,
        NodeSource::Grey(_) => return Err(QqError::GreyNodePassed(node)),
    };
    let mut f = match color {
        NodeColor::White => l.clone(),
        NodeColor::Black => l * l,
        NodeColor::Grey => return Err(QqError::GreyNodePassed(node)),
    };
    for j in diagram.nodes() {
        if j == node {
            continue;
        }
        let a_ji = diagram.cartan(j, node)?;
        if a_ji.is_zero() {
            continue;
        }
        let factor = match (color, diagram.color(j)?) {
            // white node: q_+^{j,-a_ji} white, q_+^{j,-a_ji/2} black,
            // (q^j)^{a_ji} grey
            (NodeColor::White, NodeColor::White) => {
                let e =
                    rat_to_i64(a_ji).ok_or(QqError::NonIntegralExponent { node, with: j })?;
                RatFunc::from_poly(q_plus[j - 1].clone()).powi(-e)?
            }
            (NodeColor::White, NodeColor::Black) => {
                let half = a_ji / Rat::from_integer(2.into());
                let e = rat_to_i64(&half)
                    .ok_or(QqError::NonIntegralBlackExponent { node, with: j })?;
                RatFunc::from_poly(q_plus[j - 1].clone()).powi(-e)?
            }
            (NodeColor::White, NodeColor::Grey) => {
                let e =
                    rat_to_i64(a_ji).ok_or(QqError::NonIntegralExponent { node, with: j })?;
                let qj = grey_q[j - 1]
                    .clone()
                    .ok_or(QqError::UnresolvableSource(j))?;
                if qj.is_zero() && e < 0 {
                    return Err(QqError::ZeroGreyFraction(j));
                }
                qj.powi(e)?
            }
            // black node: doubled white/grey exponents, plain black ones
            (NodeColor::Black, NodeColor::White) => {
                let e =
                    rat_to_i64(a_ji).ok_or(QqError::NonIntegralExponent { node, with: j })?;
                RatFunc::from_poly(q_plus[j - 1].clone()).powi(-2 * e)?
            }
            (NodeColor::Black, NodeColor::Black) => {
                let e =
                    rat_to_i64(a_ji).ok_or(QqError::NonIntegralExponent { node, with: j })?;
                RatFunc::from_poly(q_plus[j - 1].clone()).powi(-e)?
            }
            (NodeColor::Black, NodeColor::Grey) => {
                let e =
                    rat_to_i64(a_ji).ok_or(QqError::NonIntegralExponent { node, with: j })?;
                let qj = grey_q[j - 1]
                    .clone()
                    .ok_or(QqError::UnresolvableSource(j))?;
                if qj.is_zero() && 2 * e < 0 {
                    return Err(QqError::ZeroGreyFraction(j));
                }
                qj.powi(2 * e)?
            }
            (NodeColor::Grey, _) => unreachable!("grey rejected above"),
        };
        f = &f * &factor;
    }
    Ok(f)
}

/// `F_node` for an explicit solution.
pub fn build_f<K: Scalar>(
    spec: &QqSpec<K>,
    sol: &QqSolution<K>,
    node: usize,
) -> Result<RatFunc<K>, QqError> {
    let q_plus = sol.q_plus_vec();
    let grey_q = grey_fractions(spec, sol)?;
    build_f_parts(spec, &q_plus, &grey_q, node)
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

/// Per-node residuals of the qq-system: at even nodes
/// `W(q_-, q_+) + <Z, alpha> q_+ q_- - F`, at grey nodes `q_+ q_- - L~`.
/// The solution is valid iff every entry vanishes identically.
pub fn residual_qq<K: Scalar>(
    spec: &QqSpec<K>,
    sol: &QqSolution<K>,
) -> Result<Vec<RatFunc<K>>, QqError> {
    let diagram = spec.diagram();
    if sol.len() != diagram.rank() {
        return Err(QqError::LengthMismatch {
            expected: diagram.rank(),
            got: sol.len(),
        });
    }
    let q_plus = sol.q_plus_vec();
    let grey_q = grey_fractions(spec, sol)?;
    let mut out = Vec::with_capacity(diagram.rank());
    for node in diagram.nodes() {
        let pair = sol.pair(node);
        let residual = if diagram.color(node)? == NodeColor::Grey {
            let lt = resolve_grey_source(spec, &q_plus, node)?;
            RatFunc::from_poly(&(pair.q_plus() * pair.q_minus()) - &lt)
        } else {
            let f = build_f_parts(spec, &q_plus, &grey_q, node)?;
            let w = wronskian(pair.q_minus(), pair.q_plus());
            let c = spec.pairing(node)?;
            let lhs = &w + &(pair.q_plus() * pair.q_minus()).scale(&c);
            &RatFunc::from_poly(lhs) - &f
        };
        out.push(residual);
    }
    Ok(out)
}

/// Residual of one node of the pq-system. Even nodes carry a differential
/// equation and a product equation; grey nodes only the product equation.
#[derive(Debug, Clone, PartialEq)]
pub struct PqResidual<K: Scalar> {
    pub differential: Option<RatFunc<K>>,
    pub product: RatFunc<K>,
}

impl<K: Scalar> PqResidual<K> {
    pub fn is_zero(&self) -> bool {
        self.differential.as_ref().is_none_or(RatFunc::is_zero) && self.product.is_zero()
    }
}

/// Per-node residuals of the pq-system.
///
/// The product equation `p_+ p_- = L~` is checked against the node's stored
/// polynomial when present; at even nodes without one it falls back to the
/// reduction `L~_i = q_+^i`.
pub fn residual_pq<K: Scalar>(
    spec: &QqSpec<K>,
    sol: &PqSolution<K>,
) -> Result<Vec<PqResidual<K>>, QqError> {
    let diagram = spec.diagram();
    if sol.nodes().len() != diagram.rank() {
        return Err(QqError::LengthMismatch {
            expected: diagram.rank(),
            got: sol.nodes().len(),
        });
    }
    // q_+ per node for deferred grey sources: q data where present, p_+ at
    // grey nodes (the grey redefinition identifies the pairs)
    let q_plus: Vec<Poly<K>> = diagram
        .nodes()
        .map(|n| {
            let pn = sol.node(n);
            match pn.q() {
                Some(q) => q.q_plus().clone(),
                None => pn.p_plus().clone(),
            }
        })
        .collect();

    let p_fracs: Vec<RatFunc<K>> = sol
        .nodes()
        .iter()
        .map(|n| n.fraction())
        .collect::<Result<_, _>>()?;

    let mut out = Vec::with_capacity(diagram.rank());
    for node in diagram.nodes() {
        let pn = sol.node(node);
        let color = diagram.color(node)?;
        if color == NodeColor::Grey {
            let lt = resolve_grey_source(spec, &q_plus, node)?;
            out.push(PqResidual {
                differential: None,
                product: RatFunc::from_poly(&(pn.p_plus() * pn.p_minus()) - &lt),
            });
            continue;
        }
        let NodeSource::Even { l, lambda_tilde } = spec.source(node) else {
            return Err(QqError::GreyNodePassed(node));
        };
        let Some(q) = pn.q() else {
            return Err(QqError::MissingQData(node));
        };
        let mut f = match color {
            NodeColor::White => {
                let p_i = &p_fracs[node - 1];
                &(l * p_i) * p_i
            }
            NodeColor::Black => {
                let lp = l * &p_fracs[node - 1];
                &lp * &lp
            }
            NodeColor::Grey => unreachable!(),
        };
        for j in diagram.nodes() {
            if j == node {
                continue;
            }
            let a_ji = diagram.cartan(j, node)?;
            if a_ji.is_zero() {
                continue;
            }
            let pj = &p_fracs[j - 1];
            if pj.is_zero() {
                return Err(QqError::ZeroGreyFraction(j));
            }
            let e = match (color, diagram.color(j)?) {
                (NodeColor::White, NodeColor::Black) => {
                    let half = a_ji / Rat::from_integer(2.into());
                    rat_to_i64(&half)
                        .ok_or(QqError::NonIntegralBlackExponent { node, with: j })?
                }
                (NodeColor::White, _) => {
                    rat_to_i64(a_ji).ok_or(QqError::NonIntegralExponent { node, with: j })?
                }
                (NodeColor::Black, NodeColor::Black) => {
                    rat_to_i64(a_ji).ok_or(QqError::NonIntegralExponent { node, with: j })?
                }
                (NodeColor::Black, _) => {
                    2 * rat_to_i64(a_ji)
                        .ok_or(QqError::NonIntegralExponent { node, with: j })?
                }
                (NodeColor::Grey, _) => unreachable!(),
            };
            f = &f * &pj.powi(e)?;
        }
        let qf = q.fraction();
        let c = spec.pairing(node)?;
        let differential = &(&qf.derivative() + &(&qf * &RatFunc::constant(c))) - &f;
        let target = match lambda_tilde {
            Some(p) => p.clone(),
            None => q.q_plus().clone(),
        };
        let product = RatFunc::from_poly(&(pn.p_plus() * pn.p_minus()) - &target);
        out.push(PqResidual {
            differential: Some(differential),
            product,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Nondegeneracy
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum NondegClause {
    /// `F_i` and `q_+^i` share a root; witness gcd attached.
    SharedRoot,
    /// `q_+^i` has a repeated root; witness `gcd(q_+, q_+')` attached.
    RepeatedRoot,
    /// The node's pair shares a root; witness gcd attached.
    PairNotCoprime,
}

impl fmt::Display for NondegClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NondegClause::SharedRoot => write!(f, "F shares a root with q_plus"),
            NondegClause::RepeatedRoot => write!(f, "q_plus has a repeated root"),
            NondegClause::PairNotCoprime => write!(f, "q_plus and q_minus share a root"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondegViolation<K: Scalar> {
    pub node: usize,
    pub clause: NondegClause,
    pub witness: Poly<K>,
}

/// Structured nondegeneracy report; empty means nondegenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct NondegReport<K: Scalar> {
    pub violations: Vec<NondegViolation<K>>,
}

impl<K: Scalar> NondegReport<K> {
    pub fn is_nondegenerate(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-node nondegeneracy checks: `F_i` coprime to `q_+^i`, all roots of
/// `q_+^i` simple, the node pair coprime. Witnesses are gcds.
pub fn check_nondegenerate<K: Scalar>(
    spec: &QqSpec<K>,
    sol: &QqSolution<K>,
) -> Result<NondegReport<K>, QqError> {
    let diagram = spec.diagram();
    let q_plus = sol.q_plus_vec();
    let grey_q = grey_fractions(spec, sol)?;
    let mut violations = Vec::new();
    for node in diagram.nodes() {
        let pair = sol.pair(node);
        if diagram.color(node)? != NodeColor::Grey {
            let f = build_f_parts(spec, &q_plus, &grey_q, node)?;
            let g = f.num().gcd(pair.q_plus());
            if !g.is_constant() {
                violations.push(NondegViolation {
                    node,
                    clause: NondegClause::SharedRoot,
                    witness: g,
                });
            }
        }
        let rep = pair.q_plus().gcd(&pair.q_plus().derivative());
        if !rep.is_constant() {
            violations.push(NondegViolation {
                node,
                clause: NondegClause::RepeatedRoot,
                witness: rep,
            });
        }
        let pc = pair.q_plus().gcd(pair.q_minus());
        if !pc.is_constant() {
            violations.push(NondegViolation {
                node,
                clause: NondegClause::PairNotCoprime,
                witness: pc,
            });
        }
    }
    Ok(NondegReport { violations })
}

// ---------------------------------------------------------------------------
// Family builders
// ---------------------------------------------------------------------------

/// sl(n|m) system from `T_1..T_{n+m}`: white sources `T_i/T_{i+1}`, grey
/// sources deferred, twist zero.
pub fn build_slnm_spec<K: Scalar>(
    t: Vec<Poly<K>>,
    diagram: Arc<DynkinDiagram>,
) -> Result<QqSpec<K>, QqError> {
    if diagram.parity_word().is_none() {
        return Err(QqError::WrongFamily("the sl(n|m) builder"));
    }
    if t.len() != diagram.rank() + 1 {
        return Err(QqError::LengthMismatch {
            expected: diagram.rank() + 1,
            got: t.len(),
        });
    }
    if t.iter().any(Poly::is_zero) {
        return Err(QqError::ZeroPolynomial(0));
    }
    let mut sources = Vec::with_capacity(diagram.rank());
    let mut degenerate = Vec::new();
    for node in diagram.nodes() {
        if diagram.color(node)? == NodeColor::Grey {
            if (&t[node - 1] * &t[node]).is_constant() {
                degenerate.push(node);
            }
            sources.push(NodeSource::Grey(GreySource::DeferredSlnm));
        } else {
            let l = RatFunc::new(t[node - 1].clone(), t[node].clone())?;
            sources.push(NodeSource::Even {
                l,
                lambda_tilde: None,
            });
        }
    }
    let zetas = vec![K::zero(); diagram.rank()];
    let mut spec = QqSpec::new(diagram, zetas, sources)?;
    spec.t_data = Some(t);
    spec.degenerate_grey = degenerate;
    Ok(spec)
}

/// osp(m|2n) system from per-node source polynomials: white nodes take
/// `Lambda_i` directly, black nodes its exact square root (the residual
/// squares it back), grey nodes the deferred osp formula. Twist zero.
pub fn build_osp_spec<K: Scalar>(
    lambda: Vec<Poly<K>>,
    diagram: Arc<DynkinDiagram>,
) -> Result<QqSpec<K>, QqError> {
    match diagram.family() {
        crate::rootdata::Family::Osp { .. } | crate::rootdata::Family::Osp12 => {}
        _ => return Err(QqError::WrongFamily("the osp builder")),
    }
    if lambda.len() != diagram.rank() {
        return Err(QqError::LengthMismatch {
            expected: diagram.rank(),
            got: lambda.len(),
        });
    }
    let mut sources = Vec::with_capacity(diagram.rank());
    let mut degenerate = Vec::new();
    for node in diagram.nodes() {
        let lam = &lambda[node - 1];
        match diagram.color(node)? {
            NodeColor::Grey => {
                if lam.is_constant() {
                    degenerate.push(node);
                }
                sources.push(NodeSource::Grey(GreySource::DeferredOsp));
            }
            NodeColor::White => {
                if lam.is_zero() {
                    return Err(QqError::ZeroPolynomial(node));
                }
                sources.push(NodeSource::Even {
                    l: RatFunc::from_poly(lam.clone()),
                    lambda_tilde: None,
                });
            }
            NodeColor::Black => {
                let lc_root = lam
                    .leading()
                    .and_then(|c| c.sqrt())
                    .ok_or(QqError::NotASquare(node))?;
                let root = lam.sqrt_with(lc_root).ok_or(QqError::NotASquare(node))?;
                sources.push(NodeSource::Even {
                    l: RatFunc::from_poly(root),
                    lambda_tilde: None,
                });
            }
        }
    }
    let zetas = vec![K::zero(); diagram.rank()];
    let mut spec = QqSpec::new(diagram, zetas, sources)?;
    spec.osp_lambda = Some(lambda);
    spec.degenerate_grey = degenerate;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Cartan data of a p pair
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct CartanU<K: Scalar> {
    pub u: RatFunc<K>,
    pub u_tilde: Poly<K>,
    pub lambda_tilde: Poly<K>,
}

/// Cartan connection data of a coprime pair `(p_+, p_-)` at a node:
/// `u = zeta + ln'(p_-/p_+)`, `L~ = p_+ p_-`, and the numerator
/// `u~ = W(p_-, p_+) + c p_- p_+` with `c = 2 zeta` at rank one (the printed
/// normalization) and `c = <Z, alpha>` otherwise. The exact identity
/// `(u - zeta + c) L~ = u~` is asserted before returning.
pub fn cartan_u<K: Scalar>(
    spec: &QqSpec<K>,
    p_plus: &Poly<K>,
    p_minus: &Poly<K>,
    node: usize,
) -> Result<CartanU<K>, QqError> {
    spec.diagram().color(node)?;
    if p_plus.is_zero() || p_minus.is_zero() {
        return Err(QqError::ZeroPolynomial(node));
    }
    if K::EXACT && !p_plus.gcd(p_minus).is_constant() {
        return Err(QqError::PairNotCoprime(node));
    }
    let zeta = spec.zeta(node).clone();
    let c = if spec.diagram().rank() == 1 {
        zeta.clone() + zeta.clone()
    } else {
        spec.pairing(node)?
    };
    let p = RatFunc::new(p_minus.clone(), p_plus.clone())?;
    let u = &RatFunc::constant(zeta.clone()) + &p.log_derivative()?;
    let lambda_tilde = p_plus * p_minus;
    let u_tilde = &wronskian(p_minus, p_plus) + &lambda_tilde.scale(&c);
    if K::EXACT {
        let shifted = &u + &RatFunc::constant(c - zeta);
        let lhs = &shifted * &RatFunc::from_poly(lambda_tilde.clone());
        assert_eq!(
            lhs,
            RatFunc::from_poly(u_tilde.clone()),
            "cartan identity must hold for coprime pairs"
        );
    }
    Ok(CartanU {
        u,
        u_tilde,
        lambda_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::Family;
    use crate::scalar::SplitMix64;
    use num_traits::One;

    fn p(coeffs: &[i64]) -> Poly<Gauss> {
        Poly::new(coeffs.iter().map(|&c| Gauss::int(c)).collect())
    }

    fn pr(coeffs: &[(i64, i64)]) -> Poly<Gauss> {
        Poly::new(coeffs.iter().map(|&(n, d)| Gauss::ratio(n, d)).collect())
    }

    fn arc(f: Family) -> Arc<DynkinDiagram> {
        Arc::new(DynkinDiagram::build(f).unwrap())
    }

    fn sl2_spec(zeta: Gauss, lambda: Poly<Gauss>) -> QqSpec<Gauss> {
        QqSpec::new(
            arc(Family::Sl2),
            vec![zeta],
            vec![NodeSource::Even {
                l: RatFunc::from_poly(lambda),
                lambda_tilde: None,
            }],
        )
        .unwrap()
    }

    fn sol1(q_plus: Poly<Gauss>, q_minus: Poly<Gauss>) -> QqSolution<Gauss> {
        QqSolution::new(vec![QqPair::new(q_plus, q_minus).unwrap()])
    }

    #[test]
    fn sl2_fixture_residual_vanishes() {
        // zeta = 1/2, Lambda = z - 1, q_+ = z, q_- = 1:
        // W(1, z) + 2*(1/2)*1*z - (z - 1) = -1 + z - z + 1 = 0
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let sol = sol1(p(&[0, 1]), p(&[1]));
        let res = residual_qq(&spec, &sol).unwrap();
        assert!(res[0].is_zero(), "residual {}", res[0]);
        // zeta = 0, Lambda = z^2 - 1, q_+ = z, q_- = z^2 + 1
        let spec = sl2_spec(Gauss::zero(), p(&[-1, 0, 1]));
        let sol = sol1(p(&[0, 1]), p(&[1, 0, 1]));
        assert!(residual_qq(&spec, &sol).unwrap()[0].is_zero());
        // tampering breaks it
        let bad = sol1(p(&[0, 1]), p(&[2, 0, 1]));
        assert!(!residual_qq(&spec, &bad).unwrap()[0].is_zero());
    }

    #[test]
    fn rank_one_black_squares_the_source() {
        let diagram = arc(Family::Osp12);
        let spec = build_osp_spec(vec![p(&[1, -2, 1])], diagram).unwrap();
        // L = z - 1, F = (z - 1)^2
        let sol = sol1(p(&[0, 1]), p(&[1]));
        let f = build_f(&spec, &sol, 1).unwrap();
        assert_eq!(f, RatFunc::from_poly(p(&[1, -2, 1])));
        // a non-square source is rejected
        assert!(matches!(
            build_osp_spec(vec![p(&[0, 1, 1])], arc(Family::Osp12)),
            Err(QqError::NotASquare(1))
        ));
    }

    #[test]
    fn gl11_product_residual() {
        let diagram = arc(Family::Gl11);
        let spec = QqSpec::new(
            diagram,
            vec![Gauss::zero()],
            vec![NodeSource::Grey(GreySource::Explicit(p(&[-1, 2])))],
        )
        .unwrap();
        // q_+ = z - 1/2, q_- = 2: product 2z - 1 matches
        let sol = sol1(pr(&[(-1, 2), (1, 1)]), p(&[2]));
        assert!(residual_qq(&spec, &sol).unwrap()[0].is_zero());
        let bad = sol1(pr(&[(-1, 2), (1, 1)]), p(&[3]));
        assert!(!residual_qq(&spec, &bad).unwrap()[0].is_zero());
    }

    #[test]
    fn slnm_builder_collapses_to_gl11_formula() {
        // T = (z, z - 1): Lambda~ = ln'(z(z-1)) * z(z-1) = 2z - 1
        let diagram = arc(Family::Gl11);
        let spec = build_slnm_spec(vec![p(&[0, 1]), p(&[-1, 1])], diagram).unwrap();
        let lt = resolve_grey_source(&spec, &[Poly::one()], 1).unwrap();
        assert_eq!(lt, p(&[-1, 2]));
    }

    #[test]
    fn slnm_grey_formula_matches_oracle_for_random_t() {
        // Lambda~ * (T1 T2) == (T1 T2)' * radical(T1 T2): the defining
        // property of ln'(Lambda) pi, checked without rational reduction.
        let mut rng = SplitMix64::new(41);
        let diagram = arc(Family::Gl11);
        let mut checked = 0;
        while checked < 10 {
            let deg1 = rng.next_range(0, 3);
            let deg2 = rng.next_range(0, 3);
            let t1 = Poly::new((0..=deg1).map(|_| Gauss::int(rng.next_range(-3, 3))).collect());
            let t2 = Poly::new((0..=deg2).map(|_| Gauss::int(rng.next_range(-3, 3))).collect());
            if t1.is_zero() || t2.is_zero() || (&t1 * &t2).is_constant() {
                continue;
            }
            let spec = build_slnm_spec(vec![t1.clone(), t2.clone()], diagram.clone()).unwrap();
            let lt = resolve_grey_source(&spec, &[Poly::one()], 1).unwrap();
            let prod = &t1 * &t2;
            let pi = squarefree_radical(&prod).unwrap();
            assert_eq!(&lt * &prod, &prod.derivative() * &pi);
            checked += 1;
        }
    }

    #[test]
    fn sl21_white_node_carries_inverted_grey_fraction() {
        // T = (z, 1, 1): white source z; the grey neighbor enters F_1 as
        // (q^2)^(a_21) = (q_-^2/q_+^2)^(-1)
        let diagram = arc(Family::Slnm { n: 2, m: 1 });
        let spec = build_slnm_spec(vec![p(&[0, 1]), p(&[1]), p(&[1])], diagram).unwrap();
        match spec.source(1) {
            NodeSource::Even { l, .. } => assert_eq!(l, &RatFunc::from_poly(p(&[0, 1]))),
            _ => panic!("node 1 must be even"),
        }
        let sol = QqSolution::new(vec![
            QqPair::new(p(&[0, 1]), p(&[1])).unwrap(),
            QqPair::new(p(&[3, 1]), p(&[5])).unwrap(),
        ]);
        let f1 = build_f(&spec, &sol, 1).unwrap();
        // z * q_+^2 / q_-^2 = z (z + 3) / 5
        let expect = RatFunc::new(&p(&[0, 1]) * &p(&[3, 1]), p(&[5])).unwrap();
        assert_eq!(f1, expect);
        // the grey formula references q_+^1
        let lt = resolve_grey_source(&spec, &sol.q_plus_vec(), 2).unwrap();
        assert_eq!(lt, p(&[1])); // (q_+^1)' for q_+^1 = z
    }

    #[test]
    fn slnm_builder_flags_constant_sources() {
        let diagram = arc(Family::Gl11);
        let spec = build_slnm_spec(vec![p(&[2]), p(&[3])], diagram).unwrap();
        assert_eq!(spec.degenerate_grey(), &[1]);
    }

    #[test]
    fn pq_reduction_reproduces_qq() {
        // On sl(2): with p_+ = q_+, p_- = 1 both residual forms vanish on
        // the fixture.
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let qq = sol1(p(&[0, 1]), p(&[1]));
        let pq = PqSolution::new(vec![PqNode::new(
            p(&[0, 1]),
            p(&[1]),
            Some(QqPair::new(p(&[0, 1]), p(&[1])).unwrap()),
        )
        .unwrap()]);
        let r_pq = residual_pq(&spec, &pq).unwrap();
        assert!(r_pq[0].is_zero(), "pq residual {:?}", r_pq[0]);
        assert!(residual_qq(&spec, &qq).unwrap()[0].is_zero());
    }

    #[test]
    fn pq_qq_equivalence_symbolically_at_small_degree() {
        // residual_pq.differential * q_+^2 == residual_qq for reduction data,
        // on random exact instances of degree <= 2.
        let mut rng = SplitMix64::new(57);
        let mut checked = 0;
        while checked < 20 {
            let zeta = Gauss::int(rng.next_range(-2, 2));
            let lam = Poly::new(
                (0..=rng.next_range(0, 2))
                    .map(|_| Gauss::int(rng.next_range(-3, 3)))
                    .collect(),
            );
            let qp = {
                let mut v: Vec<Gauss> = (0..rng.next_range(1, 2))
                    .map(|_| Gauss::int(rng.next_range(-3, 3)))
                    .collect();
                v.push(Gauss::one());
                Poly::new(v)
            };
            let qm = Poly::new(
                (0..=rng.next_range(0, 2))
                    .map(|_| Gauss::int(rng.next_range(-3, 3)))
                    .collect(),
            );
            if lam.is_zero() || qp.is_constant() || qm.is_zero() {
                continue;
            }
            let spec = sl2_spec(zeta, lam);
            let qq_sol = sol1(qp.clone(), qm.clone());
            let pq_sol = PqSolution::new(vec![PqNode::new(
                qp.clone(),
                Poly::one(),
                Some(QqPair::new(qp.clone(), qm.clone()).unwrap()),
            )
            .unwrap()]);
            let r_qq = &residual_qq(&spec, &qq_sol).unwrap()[0];
            let r_pq = residual_pq(&spec, &pq_sol).unwrap()[0]
                .differential
                .clone()
                .unwrap();
            let scaled = &r_pq * &RatFunc::from_poly(&qp * &qp);
            assert_eq!(&scaled, r_qq);
            checked += 1;
        }
    }

    #[test]
    fn pq_zero_candidate_rejected() {
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let pq = PqSolution::new(vec![PqNode::new(
            p(&[0, 1]),
            p(&[1]),
            Some(QqPair::new(p(&[1]), Poly::zero()).unwrap()),
        )
        .unwrap()]);
        let r = residual_pq(&spec, &pq).unwrap();
        // q = 0 leaves -F as the differential residual
        assert!(!r[0].is_zero());
    }

    #[test]
    fn gl11_pq_product_only() {
        let diagram = arc(Family::Gl11);
        let spec = QqSpec::new(
            diagram,
            vec![Gauss::zero()],
            vec![NodeSource::Grey(GreySource::Explicit(p(&[-1, 2])))],
        )
        .unwrap();
        // p_- = z - 1/2 (monic), p_+ = 2
        let pq =
            PqSolution::new(vec![PqNode::new(p(&[2]), pr(&[(-1, 2), (1, 1)]), None).unwrap()]);
        let r = residual_pq(&spec, &pq).unwrap();
        assert!(r[0].differential.is_none());
        assert!(r[0].product.is_zero());
    }

    #[test]
    fn nondegeneracy_report() {
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let good = sol1(p(&[0, 1]), p(&[1]));
        assert!(check_nondegenerate(&spec, &good).unwrap().is_nondegenerate());

        // Lambda = z shares its root with q_+ = z
        let spec_shared = sl2_spec(Gauss::ratio(1, 2), p(&[0, 1]));
        let report = check_nondegenerate(&spec_shared, &good).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.clause == NondegClause::SharedRoot && v.witness == p(&[0, 1])));

        // q_+ = z^2 has a repeated root
        let rep = sol1(p(&[0, 0, 1]), p(&[1]));
        let report = check_nondegenerate(&spec, &rep).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.clause == NondegClause::RepeatedRoot && v.witness == p(&[0, 1])));
    }

    #[test]
    fn cartan_u_examples() {
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        // p = 1: u = zeta, u~ = 2 zeta, L~ = 1
        let out = cartan_u(&spec, &Poly::one(), &Poly::one(), 1).unwrap();
        assert_eq!(out.u, RatFunc::constant(Gauss::ratio(1, 2)));
        assert_eq!(out.u_tilde, p(&[1]));
        assert_eq!(out.lambda_tilde, Poly::one());

        // p_- = z - 1/2, p_+ = 2: L~ = 2z - 1, u~ = 2 + 4 zeta (z - 1/2)
        let zeta = Gauss::int(3);
        let spec3 = sl2_spec(zeta, p(&[-1, 1]));
        let out = cartan_u(&spec3, &p(&[2]), &pr(&[(-1, 2), (1, 1)]), 1).unwrap();
        assert_eq!(out.lambda_tilde, p(&[-1, 2]));
        // 2 + 4*3*(z - 1/2) = 12z - 4
        assert_eq!(out.u_tilde, p(&[-4, 12]));

        // p = z - w: u = zeta + 1/(z - w)
        let out = cartan_u(&spec, &Poly::one(), &p(&[-5, 1]), 1).unwrap();
        let expect = &RatFunc::constant(Gauss::ratio(1, 2))
            + &RatFunc::new(Poly::one(), p(&[-5, 1])).unwrap();
        assert_eq!(out.u, expect);

        // shared root rejected
        assert!(matches!(
            cartan_u(&spec, &p(&[-5, 1]), &p(&[-5, 1]), 1),
            Err(QqError::PairNotCoprime(1))
        ));
    }

    #[test]
    fn pure_even_rank_two_residual() {
        // sl(3)-type diagram with constant sources
        let diagram = Arc::new(DynkinDiagram::build(Family::Slnm { n: 3, m: 0 }).unwrap());
        let spec = QqSpec::new(
            diagram,
            vec![Gauss::ratio(1, 3), Gauss::ratio(-1, 3)],
            vec![
                NodeSource::Even {
                    l: RatFunc::from_poly(Poly::one()),
                    lambda_tilde: None,
                },
                NodeSource::Even {
                    l: RatFunc::from_poly(Poly::one()),
                    lambda_tilde: None,
                },
            ],
        )
        .unwrap();
        // pairings: c_1 = 2/3 + 1/3 = 1, c_2 = -1/3 - 2/3 = -1
        assert_eq!(spec.pairing(1).unwrap(), Gauss::one());
        assert_eq!(spec.pairing(2).unwrap(), Gauss::int(-1));
        let sol = QqSolution::new(vec![
            QqPair::new(p(&[0, 1]), p(&[1])).unwrap(),
            QqPair::new(p(&[-1, 1]), p(&[-1])).unwrap(),
        ]);
        let res = residual_qq(&spec, &sol).unwrap();
        assert!(res.iter().all(RatFunc::is_zero), "residuals {res:?}");
    }

    #[test]
    fn pure_even_f_is_the_displayed_product() {
        // on an even diagram F_i must equal L_i prod_{j != i} q_+^{j, -a_ji}
        let diagram = Arc::new(DynkinDiagram::build(Family::Slnm { n: 3, m: 0 }).unwrap());
        let lam1 = p(&[2, 1]);
        let lam2 = p(&[-3, 1]);
        let spec = QqSpec::new(
            diagram,
            vec![Gauss::ratio(1, 2), Gauss::ratio(1, 3)],
            vec![
                NodeSource::Even {
                    l: RatFunc::from_poly(lam1.clone()),
                    lambda_tilde: None,
                },
                NodeSource::Even {
                    l: RatFunc::from_poly(lam2.clone()),
                    lambda_tilde: None,
                },
            ],
        )
        .unwrap();
        let sol = QqSolution::new(vec![
            QqPair::new(p(&[0, 1]), p(&[7])).unwrap(),
            QqPair::new(p(&[-1, 0, 1]), p(&[1, 1])).unwrap(),
        ]);
        // a_21 = a_12 = -1: exponents -a_ji = +1
        let f1 = build_f(&spec, &sol, 1).unwrap();
        assert_eq!(f1, RatFunc::from_poly(&lam1 * sol.pair(2).q_plus()));
        let f2 = build_f(&spec, &sol, 2).unwrap();
        assert_eq!(f2, RatFunc::from_poly(&lam2 * sol.pair(1).q_plus()));
    }

    #[test]
    fn domain_values_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<QqSpec<Gauss>>();
        assert_send_sync::<QqSolution<Gauss>>();
        assert_send_sync::<PqSolution<Gauss>>();
        assert_send_sync::<DynkinDiagram>();
        assert_send_sync::<crate::rootdata::TwistZ>();
        assert_send_sync::<crate::psdo::FactorChain<Gauss>>();
        assert_send_sync::<crate::operconn::Connection<Gauss>>();
    }

    #[test]
    fn build_f_empty_products_at_rank_one() {
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let sol = sol1(p(&[0, 1]), p(&[1]));
        assert_eq!(
            build_f(&spec, &sol, 1).unwrap(),
            RatFunc::from_poly(p(&[-1, 1]))
        );
        let grey_spec = QqSpec::new(
            arc(Family::Gl11),
            vec![Gauss::zero()],
            vec![NodeSource::Grey(GreySource::Explicit(Poly::one()))],
        )
        .unwrap();
        assert!(matches!(
            build_f(&grey_spec, &sol, 1),
            Err(QqError::GreyNodePassed(1))
        ));
    }

    #[test]
    fn osp14_black_white_coupling() {
        // osp(1|4): node 1 white, node 2 black, cartan [[2,-1],[-2,2]].
        // Twist (2, 3): pairings c_1 = 2*2 - 3 = 1, c_2 = -2 + 3 = 1.
        // Solution: node 1 pair (1, 1), node 2 pair (z+1, z-3);
        // F_1 = L_1 q_+^{2,+1}, F_2 = L_2^2 q_+^{1,+2}.
        let diagram = Arc::new(DynkinDiagram::build(Family::Osp { m: 1, n: 2 }).unwrap());
        let l1 = RatFunc::new(Poly::one(), p(&[1, 1])).unwrap(); // 1/(z+1)
        let spec = QqSpec::new(
            diagram,
            vec![Gauss::int(2), Gauss::int(3)],
            vec![
                NodeSource::Even {
                    l: l1,
                    lambda_tilde: None,
                },
                NodeSource::Even {
                    l: RatFunc::from_poly(p(&[-1, 1])),
                    lambda_tilde: None,
                },
            ],
        )
        .unwrap();
        assert_eq!(spec.pairing(1).unwrap(), Gauss::int(1));
        assert_eq!(spec.pairing(2).unwrap(), Gauss::int(1));
        let sol = QqSolution::new(vec![
            QqPair::new(Poly::one(), Poly::one()).unwrap(),
            QqPair::new(p(&[1, 1]), p(&[-3, 1])).unwrap(),
        ]);
        // F_1 = (z+1)^{-1} * (z+1) = 1; F_2 = (z-1)^2 * 1^2
        assert_eq!(build_f(&spec, &sol, 1).unwrap(), RatFunc::one());
        assert_eq!(
            build_f(&spec, &sol, 2).unwrap(),
            RatFunc::from_poly(p(&[1, -2, 1]))
        );
        let res = residual_qq(&spec, &sol).unwrap();
        assert!(res.iter().all(RatFunc::is_zero), "residuals {res:?}");
    }

    #[test]
    fn osp32_grey_white_system_solves() {
        // osp(3|2): node 1 grey, node 2 white, cartan [[0,-1],[-2,2]].
        // Sources Lambda = (z(z-1), 2), twist (1, 1) so c_2 = -1 + 2 = 1.
        // Grey equation: q_+^1 q_-^1 = ln'(Lambda_1 q_+^2) pi_1 q_+^2 with
        // q_+^2 = 1 collapses to 2z - 1; white equation couples through
        // (q^1)^{-1}.
        let diagram = Arc::new(DynkinDiagram::build(Family::Osp { m: 3, n: 1 }).unwrap());
        let spec = build_osp_spec(
            vec![&Poly::var() * &p(&[-1, 1]), p(&[2])],
            diagram,
        )
        .unwrap()
        .with_zetas(vec![Gauss::int(1), Gauss::int(1)])
        .unwrap();
        assert_eq!(spec.pairing(2).unwrap(), Gauss::int(1));
        let sol = QqSolution::new(vec![
            QqPair::new(pr(&[(-1, 2), (1, 1)]), p(&[2])).unwrap(),
            QqPair::new(Poly::one(), pr(&[(-3, 2), (1, 1)])).unwrap(),
        ]);
        let f2 = build_f(&spec, &sol, 2).unwrap();
        assert_eq!(f2, RatFunc::from_poly(pr(&[(-1, 2), (1, 1)])));
        let res = residual_qq(&spec, &sol).unwrap();
        assert!(res.iter().all(RatFunc::is_zero), "residuals {res:?}");
        // nondegenerate as well
        assert!(check_nondegenerate(&spec, &sol).unwrap().is_nondegenerate());
    }

    #[test]
    fn osp_grey_source_is_polynomial() {
        // osp(3|2): grey node 1, white node 2; Lambda_1 = z(z-1), Lambda_2 = 1
        let diagram = Arc::new(DynkinDiagram::build(Family::Osp { m: 3, n: 1 }).unwrap());
        let lam1 = &Poly::var() * &p(&[-1, 1]);
        let spec = build_osp_spec(vec![lam1.clone(), Poly::one()], diagram).unwrap();
        let q_plus = vec![Poly::one(), p(&[2, 1])];
        let lt = resolve_grey_source(&spec, &q_plus, 1).unwrap();
        // c_12 = -1: arg = Lambda_1 q_+^2, tail = radical(Lambda_1) q_+^2
        let arg = RatFunc::from_poly(&lam1 * &p(&[2, 1]));
        let expect = &arg.log_derivative().unwrap()
            * &RatFunc::from_poly(&lam1 * &p(&[2, 1]));
        assert_eq!(RatFunc::from_poly(lt), expect);
    }

    #[test]
    fn monic_normalization_is_residual_preserving() {
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        // (2z, 1/2) normalizes to (z, 1)
        let pair = QqPair::new(p(&[0, 2]), pr(&[(1, 2)])).unwrap();
        assert_eq!(pair.q_plus(), &p(&[0, 1]));
        assert_eq!(pair.q_minus(), &p(&[1]));
        assert!(residual_qq(&spec, &QqSolution::new(vec![pair])).unwrap()[0].is_zero());
        assert!(QqPair::<Gauss>::new(Poly::zero(), Poly::one()).is_err());
    }
}
