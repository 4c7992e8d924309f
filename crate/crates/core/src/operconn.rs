//! Matrix realizations of Miura connections at desk scale, gauge action,
//! Z-twist verification in the sl(2) defining representation, and the 2x2
//! block equations of the Miura-Plücker condition.
//!
//! Only rank-one families and pure-even defining representations become
//! matrices; higher-rank data is checked through the per-node block
//! equations directly. `p^{coweight}` acts as `diag(p, 1/p)`, so everything
//! stays inside the rational-function field.

use crate::poly::Poly;
use crate::qqsystem::{NodeSource, QqError, QqSolution, QqSpec};
use crate::ratfunc::RatFunc;
use crate::rootdata::NodeColor;
use crate::scalar::Scalar;
use crate::Rat;
use num_traits::{ToPrimitive, Zero};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum OperError {
    Qq(QqError),
    /// Gauge matrices must have a nonzero determinant.
    SingularGauge,
    ShapeMismatch,
    ZeroP { node: usize },
}

impl fmt::Display for OperError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperError::Qq(e) => write!(f, "{e}"),
            OperError::SingularGauge => write!(f, "gauge matrix has vanishing determinant"),
            OperError::ShapeMismatch => write!(f, "matrix dimensions disagree"),
            OperError::ZeroP { node } => write!(f, "vanishing p data at node {node}"),
        }
    }
}

impl std::error::Error for OperError {}

impl From<QqError> for OperError {
    fn from(e: QqError) -> Self {
        OperError::Qq(e)
    }
}

impl From<crate::rootdata::RootError> for OperError {
    fn from(e: crate::rootdata::RootError) -> Self {
        OperError::Qq(QqError::Root(e))
    }
}

impl From<crate::poly::PolyError> for OperError {
    fn from(e: crate::poly::PolyError) -> Self {
        OperError::Qq(QqError::Poly(e))
    }
}

// ---------------------------------------------------------------------------
// Matrices over the rational-function field
// ---------------------------------------------------------------------------

/// Dense square matrix of rational functions.
#[derive(Debug, Clone, PartialEq)]
pub struct RatMatrix<K: Scalar> {
    dim: usize,
    entries: Vec<RatFunc<K>>,
}

impl<K: Scalar> RatMatrix<K> {
    pub fn new(dim: usize, entries: Vec<RatFunc<K>>) -> Result<Self, OperError> {
        if entries.len() != dim * dim {
            return Err(OperError::ShapeMismatch);
        }
        Ok(RatMatrix { dim, entries })
    }

    pub fn zero(dim: usize) -> Self {
        RatMatrix {
            dim,
            entries: vec![RatFunc::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = RatMatrix::zero(dim);
        for i in 0..dim {
            *m.at_mut(i, i) = RatFunc::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, row: usize, col: usize) -> &RatFunc<K> {
        &self.entries[row * self.dim + col]
    }

    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut RatFunc<K> {
        &mut self.entries[row * self.dim + col]
    }

    pub fn mul(&self, other: &RatMatrix<K>) -> Result<RatMatrix<K>, OperError> {
        if self.dim != other.dim {
            return Err(OperError::ShapeMismatch);
        }
        let mut out = RatMatrix::zero(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = RatFunc::zero();
                for k in 0..self.dim {
                    acc = &acc + &(self.at(i, k) * other.at(k, j));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &RatMatrix<K>) -> Result<RatMatrix<K>, OperError> {
        if self.dim != other.dim {
            return Err(OperError::ShapeMismatch);
        }
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a = &*a - b;
        }
        Ok(out)
    }

    /// Entrywise derivative.
    pub fn derivative(&self) -> RatMatrix<K> {
        RatMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(RatFunc::derivative).collect(),
        }
    }

    pub fn trace(&self) -> RatFunc<K> {
        let mut acc = RatFunc::zero();
        for i in 0..self.dim {
            acc = &acc + self.at(i, i);
        }
        acc
    }

    /// Gauss-Jordan inverse over the rational-function field.
    pub fn inverse(&self) -> Result<RatMatrix<K>, OperError> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = RatMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a.at(r, col).is_zero())
                .ok_or(OperError::SingularGauge)?;
            if pivot != col {
                for j in 0..n {
                    let tmp = a.at(pivot, j).clone();
                    *a.at_mut(pivot, j) = a.at(col, j).clone();
                    *a.at_mut(col, j) = tmp;
                    let tmp = inv.at(pivot, j).clone();
                    *inv.at_mut(pivot, j) = inv.at(col, j).clone();
                    *inv.at_mut(col, j) = tmp;
                }
            }
            let piv = a.at(col, col).clone();
            let piv_inv = piv.inv().map_err(|_| OperError::SingularGauge)?;
            for j in 0..n {
                *a.at_mut(col, j) = a.at(col, j) * &piv_inv;
                *inv.at_mut(col, j) = inv.at(col, j) * &piv_inv;
            }
            for r in 0..n {
                if r == col || a.at(r, col).is_zero() {
                    continue;
                }
                let factor = a.at(r, col).clone();
                for j in 0..n {
                    let t = a.at(r, j) - &(&factor * a.at(col, j));
                    *a.at_mut(r, j) = t;
                    let t = inv.at(r, j) - &(&factor * inv.at(col, j));
                    *inv.at_mut(r, j) = t;
                }
            }
        }
        Ok(inv)
    }

    pub fn det(&self) -> RatFunc<K> {
        // elimination determinant; fine at desk dimensions
        let n = self.dim;
        let mut a = self.clone();
        let mut det = RatFunc::one();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !a.at(r, col).is_zero()) else {
                return RatFunc::zero();
            };
            if pivot != col {
                for j in 0..n {
                    let tmp = a.at(pivot, j).clone();
                    *a.at_mut(pivot, j) = a.at(col, j).clone();
                    *a.at_mut(col, j) = tmp;
                }
                det = &det * &RatFunc::constant(-K::one());
            }
            let piv = a.at(col, col).clone();
            det = &det * &piv;
            let piv_inv = piv.inv().expect("nonzero pivot");
            for r in col + 1..n {
                if a.at(r, col).is_zero() {
                    continue;
                }
                let factor = a.at(r, col) * &piv_inv;
                for j in col..n {
                    let t = a.at(r, j) - &(&factor * a.at(col, j));
                    *a.at_mut(r, j) = t;
                }
            }
        }
        det
    }
}

// ---------------------------------------------------------------------------
// Connections and gauges
// ---------------------------------------------------------------------------

/// `d/dz + A(z)` in a chosen representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection<K: Scalar> {
    pub matrix: RatMatrix<K>,
    pub rep: String,
}

impl<K: Scalar> Connection<K> {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Invertible matrix of rational functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeElement<K: Scalar> {
    matrix: RatMatrix<K>,
}

impl<K: Scalar> GaugeElement<K> {
    pub fn new(matrix: RatMatrix<K>) -> Result<Self, OperError> {
        if matrix.det().is_zero() {
            return Err(OperError::SingularGauge);
        }
        Ok(GaugeElement { matrix })
    }

    pub fn matrix(&self) -> &RatMatrix<K> {
        &self.matrix
    }

    /// `e^{mu f}`: unipotent lower-triangular 2x2 gauge.
    pub fn lower_unipotent(mu: RatFunc<K>) -> Self {
        let mut m = RatMatrix::identity(2);
        *m.at_mut(1, 0) = mu;
        GaugeElement { matrix: m }
    }

    /// `e^{q e} p^{coweight} = [[p, q/p], [0, 1/p]]`.
    pub fn upper_cartan(q: &RatFunc<K>, p: &RatFunc<K>) -> Result<Self, OperError> {
        if p.is_zero() {
            return Err(OperError::ZeroP { node: 0 });
        }
        let p_inv = p.inv().map_err(|_| OperError::ZeroP { node: 0 })?;
        let mut m = RatMatrix::identity(2);
        *m.at_mut(0, 0) = p.clone();
        *m.at_mut(0, 1) = q * &p_inv;
        *m.at_mut(1, 1) = p_inv;
        Ok(GaugeElement { matrix: m })
    }
}

/// The sl(2) Miura form `[[u, Lambda], [0, -u]]`.
pub fn build_miura_sl2<K: Scalar>(u: &RatFunc<K>, lambda: &RatFunc<K>) -> Connection<K> {
    let mut m = RatMatrix::zero(2);
    *m.at_mut(0, 0) = u.clone();
    *m.at_mut(0, 1) = lambda.clone();
    *m.at_mut(1, 1) = -u;
    Connection {
        matrix: m,
        rep: "sl2-defining".to_string(),
    }
}

/// `A -> g A g^{-1} - g' g^{-1}`.
pub fn gauge_transform<K: Scalar>(
    conn: &Connection<K>,
    g: &GaugeElement<K>,
) -> Result<Connection<K>, OperError> {
    let g_inv = g.matrix.inverse()?;
    let conj = g.matrix.mul(&conn.matrix)?.mul(&g_inv)?;
    let shift = g.matrix.derivative().mul(&g_inv)?;
    Ok(Connection {
        matrix: conj.sub(&shift)?,
        rep: conn.rep.clone(),
    })
}

/// Z-twist verification in the sl(2) defining representation: builds
/// `U = e^{q e} p^{coweight}`, gauges, and compares to `diag(zeta, -zeta)`.
pub fn check_z_twisted_sl2<K: Scalar>(
    conn: &Connection<K>,
    zeta: &K,
    q: &RatFunc<K>,
    p: &RatFunc<K>,
) -> Result<bool, OperError> {
    let u = GaugeElement::upper_cartan(q, p)?;
    let twisted = gauge_transform(conn, &u)?;
    let mut expect = RatMatrix::zero(2);
    *expect.at_mut(0, 0) = RatFunc::constant(zeta.clone());
    *expect.at_mut(1, 1) = RatFunc::constant(-zeta.clone());
    Ok(twisted.matrix == expect)
}

// ---------------------------------------------------------------------------
// Miura-Plücker block equations
// ---------------------------------------------------------------------------

/// Per-node p data (and optionally the Cartan function `u^i`) feeding the
/// block checks. When `u` is absent the Cartan equation holds by definition.
#[derive(Debug, Clone)]
pub struct MpNode<K: Scalar> {
    pub p_plus: Poly<K>,
    pub p_minus: Poly<K>,
    pub u: Option<RatFunc<K>>,
}

impl<K: Scalar> MpNode<K> {
    pub fn fraction(&self) -> Result<RatFunc<K>, OperError> {
        if self.p_plus.is_zero() {
            return Err(OperError::ZeroP { node: 0 });
        }
        Ok(RatFunc::new(self.p_minus.clone(), self.p_plus.clone()).map_err(QqError::Poly)?)
    }
}

fn rat_to_i64(r: &Rat) -> Option<i64> {
    if r.is_integer() {
        r.to_integer().to_i64()
    } else {
        None
    }
}

/// The 2x2-block condition at one node.
///
/// Every node must satisfy the Cartan equation `u^i = zeta_i + ln'(p^i)`;
/// white and black nodes additionally satisfy the top-right block equation
/// (`q`-derivative against the `p`-weighted source, with doubled exponents
/// and the squared `L p` at black nodes). Grey nodes carry the Cartan
/// equation only.
pub fn check_mp_block<K: Scalar>(
    spec: &QqSpec<K>,
    sol: &QqSolution<K>,
    p_data: &[MpNode<K>],
    node: usize,
) -> Result<bool, OperError> {
    let diagram = spec.diagram();
    if p_data.len() != diagram.rank() {
        return Err(OperError::ShapeMismatch);
    }
    let color = diagram.color(node)?;
    let p_i = p_data[node - 1].fraction()?;
    if p_i.is_zero() {
        return Err(OperError::ZeroP { node });
    }

    // Cartan part: u^i = zeta_i + ln'(p^i)
    if let Some(u) = &p_data[node - 1].u {
        let expect = &RatFunc::constant(spec.zeta(node).clone())
            + &p_i.log_derivative().map_err(QqError::Poly)?;
        if *u != expect {
            return Ok(false);
        }
    }
    if color == NodeColor::Grey {
        return Ok(true);
    }

    let NodeSource::Even { l, .. } = spec.source(node) else {
        return Err(OperError::Qq(QqError::GreyNodePassed(node)));
    };

    let mut rhs = match color {
        NodeColor::White => &(l * &p_i) * &p_i,
        NodeColor::Black => {
            let lp = l * &p_i;
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
        let p_j = p_data[j - 1].fraction()?;
        if p_j.is_zero() {
            return Err(OperError::ZeroP { node: j });
        }
        let e = match (color, diagram.color(j)?) {
            (NodeColor::White, NodeColor::Black) => {
                let half = a_ji / Rat::from_integer(2.into());
                rat_to_i64(&half).ok_or(OperError::Qq(QqError::NonIntegralBlackExponent {
                    node,
                    with: j,
                }))?
            }
            (NodeColor::White, _) => rat_to_i64(a_ji).ok_or(OperError::Qq(
                QqError::NonIntegralExponent { node, with: j },
            ))?,
            (NodeColor::Black, NodeColor::Black) => rat_to_i64(a_ji).ok_or(OperError::Qq(
                QqError::NonIntegralExponent { node, with: j },
            ))?,
            (NodeColor::Black, _) => {
                2 * rat_to_i64(a_ji).ok_or(OperError::Qq(QqError::NonIntegralExponent {
                    node,
                    with: j,
                }))?
            }
            (NodeColor::Grey, _) => unreachable!(),
        };
        rhs = &rhs * &p_j.powi(e).map_err(QqError::Poly)?;
    }

    let qf = sol.pair(node).fraction();
    let c = spec.pairing(node)?;
    let lhs = &qf.derivative() + &(&qf * &RatFunc::constant(c));
    Ok(lhs == rhs)
}
