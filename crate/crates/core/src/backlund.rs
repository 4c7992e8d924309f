//! Weyl-group action on qq-solutions, Bäcklund gauge data, odd reproduction
//! steps for sl(n|m) data, and populations.
//!
//! The even swap uses the sign-adjusted convention
//! `(q_-, q_+, Z) -> (-q_+, q_-, w_i(Z))`: Wronskian antisymmetry flips the
//! source sign and the adjustment absorbs it into `q_-`, so the node's
//! source is a step invariant. Monic normalization of the new `q_+` happens
//! through the usual reciprocal scaling and is recorded.
//!
//! The odd step at a grey node rewrites the two adjacent factors of the
//! pseudo-differential factorization through the cross-multiplied exchange
//! identity. The transformed `T` polynomials are not transcribed from
//! anywhere: they are solved for (log-integration of the derived factor
//! contents), pinned to the product constraint `T'_i T'_{i+1} = T_i T_{i+1}`
//! and to `lc(T'_i) = lc(T_i)`, and the full second-order identity is then
//! re-verified coefficient by coefficient.

use crate::poly::Poly;
use crate::psdo::{build_r, chains_equal, compose, DiffOp, FactorChain, PsdoError};
use crate::qqsystem::{
    residual_qq, resolve_grey_source, NodeSource, QqError, QqPair, QqSolution,
};
use crate::ratfunc::RatFunc;
use crate::rootdata::{NodeColor, Parity, RootError};
use crate::scalar::Gauss;
use crate::{ExactSolution, ExactSpec, GPoly, GRatFunc};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum BacklundError {
    Qq(QqError),
    Psdo(PsdoError),
    Root(RootError),
    /// The input does not solve its spec; offending node attached.
    NotASolution { node: usize },
    /// The grey product equation fails at the stepped node.
    GreyEquationFails { node: usize },
    NodeIsGrey { node: usize },
    NodeNotGrey { node: usize },
    /// The cross-multiplied exchange identity fails; the order of the first
    /// mismatched coefficient is attached.
    ExchangeIdentity { coefficient: usize },
    /// Derived factor contents are not logarithmic derivatives of
    /// polynomials within the `T` product budget.
    NotComposable { node: usize },
    /// Vanishing data where the step needs an invertible quantity.
    Degenerate { node: usize },
    ZeroSource { node: usize },
}

impl fmt::Display for BacklundError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BacklundError::Qq(e) => write!(f, "{e}"),
            BacklundError::Psdo(e) => write!(f, "{e}"),
            BacklundError::Root(e) => write!(f, "{e}"),
            BacklundError::NotASolution { node } => {
                write!(f, "input does not solve the system at node {node}")
            }
            BacklundError::GreyEquationFails { node } => {
                write!(f, "grey product equation fails at node {node}")
            }
            BacklundError::NodeIsGrey { node } => write!(f, "node {node} is grey"),
            BacklundError::NodeNotGrey { node } => write!(f, "node {node} is not grey"),
            BacklundError::ExchangeIdentity { coefficient } => {
                write!(
                    f,
                    "exchange data fails the cross-multiplied identity at d^{coefficient}"
                )
            }
            BacklundError::NotComposable { node } => {
                write!(f, "solution is not composable across node {node}")
            }
            BacklundError::Degenerate { node } => write!(f, "degenerate step data at node {node}"),
            BacklundError::ZeroSource { node } => write!(f, "zero source at node {node}"),
        }
    }
}

impl std::error::Error for BacklundError {}

impl From<QqError> for BacklundError {
    fn from(e: QqError) -> Self {
        BacklundError::Qq(e)
    }
}

impl From<PsdoError> for BacklundError {
    fn from(e: PsdoError) -> Self {
        BacklundError::Psdo(e)
    }
}

impl From<RootError> for BacklundError {
    fn from(e: RootError) -> Self {
        BacklundError::Root(e)
    }
}

impl From<crate::poly::PolyError> for BacklundError {
    fn from(e: crate::poly::PolyError) -> Self {
        BacklundError::Qq(QqError::Poly(e))
    }
}

fn assert_solves(spec: &ExactSpec, sol: &ExactSolution) -> Result<(), BacklundError> {
    let residuals = residual_qq(spec, sol)?;
    match residuals.iter().position(|r| !r.is_zero()) {
        Some(idx) => Err(BacklundError::NotASolution { node: idx + 1 }),
        None => Ok(()),
    }
}

/// `Z -> w_i(Z)` on the spec's twist coordinates: white subtracts the
/// pairing, black twice the pairing (the coweight basis carries the half).
fn reflect_zetas(spec: &ExactSpec, node: usize) -> Result<Vec<Gauss>, BacklundError> {
    let color = spec.diagram().color(node)?;
    let factor = match color {
        NodeColor::Grey => return Err(BacklundError::NodeIsGrey { node }),
        NodeColor::Black => Gauss::int(2),
        NodeColor::White => Gauss::one(),
    };
    let pairing = spec.pairing(node)?;
    let mut zetas = spec.zetas().to_vec();
    zetas[node - 1] = zetas[node - 1].clone() - factor * pairing;
    Ok(zetas)
}

// ---------------------------------------------------------------------------
// Even reflection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct WeylSwapOutcome {
    pub spec: ExactSpec,
    pub solution: ExactSolution,
    /// Leading coefficient absorbed by monic renormalization of the new
    /// `q_+`; the recorded sign/scale of the near-involution.
    pub scale: Gauss,
}

/// Even Weyl reflection at a white or black node:
/// `(q_-, q_+) -> (-q_+, q_-)` at the node, everything else fixed,
/// `Z -> w_i(Z)`. The output is re-verified exactly.
pub fn weyl_swap(
    spec: &ExactSpec,
    sol: &ExactSolution,
    node: usize,
) -> Result<WeylSwapOutcome, BacklundError> {
    if spec.diagram().color(node)? == NodeColor::Grey {
        return Err(BacklundError::NodeIsGrey { node });
    }
    assert_solves(spec, sol)?;
    let pair = sol.pair(node);
    let scale = pair
        .q_minus()
        .leading()
        .cloned()
        .ok_or(BacklundError::Degenerate { node })?;
    let new_pair = QqPair::new(pair.q_minus().clone(), -pair.q_plus())?;
    let mut pairs = sol.nodes().to_vec();
    pairs[node - 1] = new_pair;
    let new_sol = QqSolution::new(pairs);
    let new_spec = spec.clone().with_zetas(reflect_zetas(spec, node)?)?;
    // the reflected data must solve the reflected system
    let residuals = residual_qq(&new_spec, &new_sol)?;
    if let Some(idx) = residuals.iter().position(|r| !r.is_zero()) {
        return Err(BacklundError::NotComposable { node: idx + 1 });
    }
    Ok(WeylSwapOutcome {
        spec: new_spec,
        solution: new_sol,
        scale,
    })
}

/// Bäcklund gauge content at an even node:
/// `mu = source^{-1} [ ln'(q_-/q_+) + <alpha, Z> ]` with the node source
/// `L` (white) or `L^2` (black).
pub fn mu_gauge(
    spec: &ExactSpec,
    sol: &ExactSolution,
    node: usize,
) -> Result<GRatFunc, BacklundError> {
    let color = spec.diagram().color(node)?;
    let l = match spec.source(node) {
        NodeSource::Even { l, .. } => l,
        NodeSource::Grey(_) => return Err(BacklundError::NodeIsGrey { node }),
    };
    if l.is_zero() {
        return Err(BacklundError::ZeroSource { node });
    }
    let source = match color {
        NodeColor::White => l.clone(),
        NodeColor::Black => l * l,
        NodeColor::Grey => unreachable!("grey rejected above"),
    };
    let q = sol.pair(node).fraction();
    if q.is_zero() {
        return Err(BacklundError::Degenerate { node });
    }
    let inner = &q.log_derivative().map_err(QqError::Poly)?
        + &RatFunc::constant(spec.pairing(node)?);
    Ok(&inner / &source)
}

// ---------------------------------------------------------------------------
// Odd reproduction step for sl(n|m) data
// ---------------------------------------------------------------------------

/// Recovers the monic-normalized polynomial `P` with `P'/P = g` scaled to
/// the given leading coefficient, when such a polynomial exists.
fn poly_from_log_derivative(g: &GRatFunc, lc: Gauss) -> Option<GPoly> {
    if lc.is_zero() {
        return None;
    }
    if g.is_zero() {
        return Some(GPoly::constant(lc));
    }
    let num = g.num();
    let den = g.den();
    let (nd, dd) = (num.degree()?, den.degree()?);
    if nd + 1 != dd {
        return None;
    }
    // denominator is monic, so the degree of P is the leading numerator
    // coefficient; it must be a positive integer
    let lead = num.leading()?.clone();
    let deg = lead.as_rational().and_then(|r| {
        if r.is_integer() && r.is_positive() {
            r.to_integer().to_usize()
        } else {
            None
        }
    })?;
    // solve P' den = num P restricted to P = lc z^deg + (lower terms)
    let rows = deg + dd;
    let operator = |p: &GPoly| -> GPoly { &(&p.derivative() * den) - &(num * p) };
    let fixed = operator(&Poly::monomial(lc.clone(), deg));
    let mut a = vec![vec![Gauss::zero(); deg]; rows];
    for k in 0..deg {
        let col = operator(&Poly::monomial(Gauss::one(), k));
        for (row, arow) in a.iter_mut().enumerate() {
            arow[k] = col.coeff(row);
        }
    }
    let b: Vec<Gauss> = (0..rows).map(|row| -fixed.coeff(row)).collect();
    let solved = crate::linalg::solve(a, b, 0.0).ok()?;
    let mut coeffs = solved.particular;
    coeffs.push(lc);
    let p = Poly::new(coeffs);
    // confirm: the log derivative must reproduce g exactly
    let back = RatFunc::from_poly(p.clone()).log_derivative().ok()?;
    (back == *g).then_some(p)
}

#[derive(Debug, Clone)]
pub struct OddStepOutcome {
    pub spec: ExactSpec,
    pub solution: ExactSolution,
    pub t_before: Vec<GPoly>,
    pub t_after: Vec<GPoly>,
    /// The factorization before and after; equal by construction and
    /// re-verified through [`chains_equal`].
    pub r_before: FactorChain<Gauss>,
    pub r_after: FactorChain<Gauss>,
    /// Kernel dimensions reported while re-solving neighbor `q_-` data.
    pub kernel_dims: Vec<usize>,
}

/// Odd reproduction step at a grey node of an sl(n|m) system.
///
/// Performs the local two-factor exchange (signs swapped, the middle
/// polynomial replaced by the other member of the grey pair), derives the
/// transformed `T` data from the cross-multiplied identity, rebuilds the
/// spec on the reflected diagram, and completes the remaining `q_-` data on
/// the new system. The step requires the grey product equation at the node;
/// it fails with [`BacklundError::NotComposable`] when the reflected system
/// does not admit the transported solution.
pub fn odd_step_slnm(
    spec: &ExactSpec,
    sol: &ExactSolution,
    node: usize,
) -> Result<OddStepOutcome, BacklundError> {
    let diagram = spec.diagram();
    if diagram.color(node)? != NodeColor::Grey {
        return Err(BacklundError::NodeNotGrey { node });
    }
    let word = diagram
        .parity_word()
        .ok_or(QqError::MissingFamilyData("parity word"))?
        .to_vec();
    let t = spec
        .t_data()
        .ok_or(QqError::MissingFamilyData("T"))?
        .to_vec();
    let q_plus = sol.q_plus_vec();

    // the exchange's own precondition: the grey product equation
    let lt = resolve_grey_source(spec, &q_plus, node)?;
    let pair = sol.pair(node);
    if &(pair.q_plus() * pair.q_minus()) - &lt != GPoly::zero() {
        return Err(BacklundError::GreyEquationFails { node });
    }
    if pair.q_minus().is_zero() {
        return Err(BacklundError::Degenerate { node });
    }

    let boundary = GPoly::one();
    let at = |pos: usize| -> &GPoly {
        if pos == 0 || pos > q_plus.len() {
            &boundary
        } else {
            &q_plus[pos - 1]
        }
    };
    let a = at(node - 1).clone();
    let c = at(node + 1).clone();
    let b = pair.q_plus().clone();

    let ell1 = RatFunc::new(&t[node - 1] * &a, b.clone())?
        .log_derivative()
        .map_err(QqError::Poly)?;
    let ell2 = RatFunc::new(&t[node] * &b, c.clone())?
        .log_derivative()
        .map_err(QqError::Poly)?;
    let s = &ell1 + &ell2;

    let (m1, m2) = if s.is_zero() {
        if ell1.is_zero() {
            (RatFunc::zero(), RatFunc::zero())
        } else {
            return Err(BacklundError::Degenerate { node });
        }
    } else {
        let ls = s.log_derivative().map_err(QqError::Poly)?;
        (&ell2 - &ls, &ell1 + &ls)
    };

    // middle polynomial: the other member of the grey pair, monic
    let sigma = pair
        .q_minus()
        .leading()
        .cloned()
        .ok_or(BacklundError::Degenerate { node })?;
    let b_tilde = pair.q_minus().monic();

    // transformed T's from log-integration, pinned by lc(T'_i) = lc(T_i)
    // and T'_i T'_{i+1} = T_i T_{i+1}
    let g_a = &m1
        - &RatFunc::new(a.clone(), b_tilde.clone())?
            .log_derivative()
            .map_err(QqError::Poly)?;
    let lc_ti = t[node - 1]
        .leading()
        .cloned()
        .ok_or(BacklundError::ZeroSource { node })?;
    let t_i_new =
        poly_from_log_derivative(&g_a, lc_ti).ok_or(BacklundError::NotComposable { node })?;
    let t_prod = &t[node - 1] * &t[node];
    let t_next_new = t_prod
        .exact_div(&t_i_new)
        .map_err(|_| BacklundError::NotComposable { node })?;
    let g_b = &m2
        - &RatFunc::new(b_tilde.clone(), c.clone())?
            .log_derivative()
            .map_err(QqError::Poly)?;
    let check_b = if t_next_new.is_constant() {
        g_b.is_zero()
    } else {
        RatFunc::from_poly(t_next_new.clone())
            .log_derivative()
            .map_err(QqError::Poly)?
            == g_b
    };
    if !check_b {
        return Err(BacklundError::NotComposable { node });
    }

    // the defining check: the cross-multiplied second-order identity
    let plus = |f: &GRatFunc| DiffOp::first_order(&-f);
    let minus = |f: &GRatFunc| DiffOp::first_order(f);
    let (lhs, rhs) = match word[node - 1] {
        // signs (+,-): (d + m1)(d - l1) = (d - m2)(d + l2)
        Parity::Even => (
            compose(&plus(&m1), &minus(&ell1)),
            compose(&minus(&m2), &plus(&ell2)),
        ),
        // signs (-,+): (d - l2)(d + m2) = (d + l1)(d - m1)
        Parity::Odd => (
            compose(&minus(&ell2), &plus(&m2)),
            compose(&plus(&ell1), &minus(&m1)),
        ),
    };
    let diff = lhs.sub(&rhs);
    if !diff.is_zero() {
        let coefficient = diff
            .coeffs()
            .iter()
            .position(|c| !c.is_zero())
            .unwrap_or(0);
        return Err(BacklundError::ExchangeIdentity { coefficient });
    }

    // reflected diagram, transformed T data, transported q data
    let new_diagram = Arc::new(diagram.odd_reflection(node)?);
    let mut t_after = t.clone();
    t_after[node - 1] = t_i_new;
    t_after[node] = t_next_new;
    let new_spec = crate::qqsystem::build_slnm_spec(t_after.clone(), new_diagram)?;

    let mut new_q_plus = q_plus.clone();
    new_q_plus[node - 1] = b_tilde;
    let preset_minus = pair.q_plus().scale(&sigma);
    let (new_sol, kernel_dims) =
        complete_solution(&new_spec, &new_q_plus, node, preset_minus)?;

    let r_before = build_r(spec, sol)?;
    let r_after = build_r(&new_spec, &new_sol)?;
    if !chains_equal(&r_before, &r_after)? {
        return Err(BacklundError::ExchangeIdentity { coefficient: 0 });
    }

    Ok(OddStepOutcome {
        spec: new_spec,
        solution: new_sol,
        t_before: t,
        t_after,
        r_before,
        r_after,
        kernel_dims,
    })
}

/// Completes `q_-` data on a spec whose `q_+` polynomials are fixed:
/// division at grey nodes, the linear Wronskian solve at even nodes. The
/// stepped node keeps its transported pair.
fn complete_solution(
    spec: &ExactSpec,
    q_plus: &[GPoly],
    preset_node: usize,
    preset_minus: GPoly,
) -> Result<(ExactSolution, Vec<usize>), BacklundError> {
    let diagram = spec.diagram();
    let mut q_minus: Vec<Option<GPoly>> = vec![None; diagram.rank()];
    q_minus[preset_node - 1] = Some(preset_minus);

    for n in diagram.nodes() {
        if n == preset_node || diagram.color(n)? != NodeColor::Grey {
            continue;
        }
        let lt = resolve_grey_source(spec, q_plus, n)?;
        let quot = lt
            .exact_div(&q_plus[n - 1])
            .map_err(|_| BacklundError::NotComposable { node: n })?;
        q_minus[n - 1] = Some(quot);
    }

    let grey_q: Vec<Option<GRatFunc>> = diagram
        .nodes()
        .map(|n| {
            if diagram.color(n).unwrap() == NodeColor::Grey {
                q_minus[n - 1].as_ref().map(|qm| {
                    RatFunc::new(qm.clone(), q_plus[n - 1].clone()).expect("nonzero q_plus")
                })
            } else {
                None
            }
        })
        .collect();

    let mut kernel_dims = vec![0usize; diagram.rank()];
    for n in diagram.nodes() {
        if n == preset_node || diagram.color(n)? == NodeColor::Grey {
            continue;
        }
        let f = crate::qqsystem::build_f_parts(spec, q_plus, &grey_q, n)?;
        let solved = solve_wronskian_node(spec, q_plus, &f, n)
            .ok_or(BacklundError::NotComposable { node: n })?;
        kernel_dims[n - 1] = solved.1;
        q_minus[n - 1] = Some(solved.0);
    }

    let pairs = diagram
        .nodes()
        .map(|n| {
            QqPair::new(q_plus[n - 1].clone(), q_minus[n - 1].clone().unwrap())
                .map_err(BacklundError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sol = QqSolution::new(pairs);
    let residuals = residual_qq(spec, &sol)?;
    if let Some(idx) = residuals.iter().position(|r| !r.is_zero()) {
        return Err(BacklundError::NotComposable { node: idx + 1 });
    }
    Ok((sol, kernel_dims))
}

/// Solves `W(q_-, q_+) + <Z,alpha> q_- q_+ = F` for `q_-` at one node.
fn solve_wronskian_node(
    spec: &ExactSpec,
    q_plus: &[GPoly],
    f: &GRatFunc,
    node: usize,
) -> Option<(GPoly, usize)> {
    let c = spec.pairing(node).ok()?;
    let qp = &q_plus[node - 1];
    let d = qp.degree()?;
    let num_deg = f.num().degree().map_or(0, |x| x as i64);
    let den_deg = f.den().degree().map_or(0, |x| x as i64);
    let extra = if c.is_zero() { 1 } else { 0 };
    let dq = (num_deg - den_deg - d as i64 + extra).max(0) as usize;
    let rows = ((dq + d) as i64 + den_deg).max(num_deg) as usize + 1;
    let mut a = vec![vec![Gauss::zero(); dq + 1]; rows];
    for k in 0..=dq {
        let zk = Poly::monomial(Gauss::one(), k);
        let lhs = &crate::poly::wronskian(&zk, qp) + &(&zk * qp).scale(&c);
        let col = &lhs * f.den();
        for (row, arow) in a.iter_mut().enumerate() {
            arow[k] = col.coeff(row);
        }
    }
    let b: Vec<Gauss> = (0..rows).map(|row| f.num().coeff(row)).collect();
    let solved = crate::linalg::solve(a, b, 0.0).ok()?;
    Some((Poly::new(solved.particular), solved.kernel_dim))
}

// ---------------------------------------------------------------------------
// Populations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    EvenReflection,
    OddReflection,
}

/// Transform record of one population step.
#[derive(Debug, Clone)]
pub struct PopulationStep {
    pub node: usize,
    pub kind: StepKind,
    /// Monic renormalization scale of an even swap.
    pub scale: Option<Gauss>,
    /// `T` data before/after an odd step.
    pub t_before: Option<Vec<GPoly>>,
    pub t_after: Option<Vec<GPoly>>,
}

#[derive(Debug, Clone)]
pub struct PopulationEntry {
    pub word_prefix: Vec<usize>,
    pub spec: ExactSpec,
    pub solution: ExactSolution,
}

/// A population: the root solution plus every intermediate produced while
/// folding the word. Every stored solution verifies exactly against its own
/// spec. `error` carries the first failing step, with the completed prefix
/// retained in `entries`.
#[derive(Debug, Clone)]
pub struct Population {
    pub entries: Vec<PopulationEntry>,
    pub steps: Vec<PopulationStep>,
    pub error: Option<(usize, String)>,
}

impl Population {
    pub fn completed(&self) -> bool {
        self.error.is_none()
    }

    pub fn last(&self) -> &PopulationEntry {
        self.entries.last().expect("population holds its root")
    }
}

/// Folds even swaps and odd steps along the word, verifying each
/// intermediate solution. A step failure aborts and reports the prefix
/// completed so far.
pub fn populate(spec: &ExactSpec, sol: &ExactSolution, word: &[usize]) -> Population {
    let mut entries = vec![PopulationEntry {
        word_prefix: Vec::new(),
        spec: spec.clone(),
        solution: sol.clone(),
    }];
    let mut steps = Vec::new();

    let mut current_spec = spec.clone();
    let mut current_sol = sol.clone();
    for (idx, &node) in word.iter().enumerate() {
        let color = match current_spec.diagram().color(node) {
            Ok(c) => c,
            Err(e) => {
                return Population {
                    entries,
                    steps,
                    error: Some((idx, e.to_string())),
                }
            }
        };
        let step = if color == NodeColor::Grey {
            match odd_step_slnm(&current_spec, &current_sol, node) {
                Ok(out) => {
                    let step = PopulationStep {
                        node,
                        kind: StepKind::OddReflection,
                        scale: None,
                        t_before: Some(out.t_before.clone()),
                        t_after: Some(out.t_after.clone()),
                    };
                    current_spec = out.spec;
                    current_sol = out.solution;
                    step
                }
                Err(e) => {
                    return Population {
                        entries,
                        steps,
                        error: Some((idx, e.to_string())),
                    }
                }
            }
        } else {
            match weyl_swap(&current_spec, &current_sol, node) {
                Ok(out) => {
                    let step = PopulationStep {
                        node,
                        kind: StepKind::EvenReflection,
                        scale: Some(out.scale),
                        t_before: None,
                        t_after: None,
                    };
                    current_spec = out.spec;
                    current_sol = out.solution;
                    step
                }
                Err(e) => {
                    return Population {
                        entries,
                        steps,
                        error: Some((idx, e.to_string())),
                    }
                }
            }
        };
        steps.push(step);
        entries.push(PopulationEntry {
            word_prefix: word[..=idx].to_vec(),
            spec: current_spec.clone(),
            solution: current_sol.clone(),
        });
    }

    Population {
        entries,
        steps,
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qqsystem::{build_f, build_slnm_spec, QqSpec};
    use crate::rootdata::{DynkinDiagram, Family};
    use crate::scalar::SplitMix64;

    fn p(coeffs: &[i64]) -> GPoly {
        Poly::new(coeffs.iter().map(|&c| Gauss::int(c)).collect())
    }

    fn pr(coeffs: &[(i64, i64)]) -> GPoly {
        Poly::new(coeffs.iter().map(|&(n, d)| Gauss::ratio(n, d)).collect())
    }

    fn arc(f: Family) -> Arc<DynkinDiagram> {
        Arc::new(DynkinDiagram::build(f).unwrap())
    }

    fn sl2_spec(zeta: Gauss, lambda: GPoly) -> ExactSpec {
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

    fn sol1(q_plus: GPoly, q_minus: GPoly) -> ExactSolution {
        QqSolution::new(vec![QqPair::new(q_plus, q_minus).unwrap()])
    }

    #[test]
    fn weyl_swap_sl2_fixture() {
        // (zeta=1/2, q_+=z, q_-=1) -> (zeta=-1/2, q_+=1, q_-=-z)
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let sol = sol1(p(&[0, 1]), p(&[1]));
        let out = weyl_swap(&spec, &sol, 1).unwrap();
        assert_eq!(out.spec.zetas(), &[Gauss::ratio(-1, 2)]);
        assert_eq!(out.solution.pair(1).q_plus(), &p(&[1]));
        assert_eq!(out.solution.pair(1).q_minus(), &p(&[0, -1]));
        // node source preserved exactly
        assert_eq!(
            build_f(&out.spec, &out.solution, 1).unwrap(),
            build_f(&spec, &sol, 1).unwrap()
        );
        // double swap returns the original exactly
        let back = weyl_swap(&out.spec, &out.solution, 1).unwrap();
        assert_eq!(back.spec, spec);
        assert_eq!(back.solution, sol);
        // grey nodes are rejected
        let gl11 = QqSpec::new(
            arc(Family::Gl11),
            vec![Gauss::zero()],
            vec![NodeSource::Grey(crate::qqsystem::GreySource::Explicit(
                p(&[-1, 2]),
            ))],
        )
        .unwrap();
        let gsol = sol1(pr(&[(-1, 2), (1, 1)]), p(&[2]));
        assert!(matches!(
            weyl_swap(&gl11, &gsol, 1),
            Err(BacklundError::NodeIsGrey { node: 1 })
        ));
        // non-solutions are rejected
        let bad = sol1(p(&[0, 1]), p(&[5]));
        assert!(matches!(
            weyl_swap(&spec, &bad, 1),
            Err(BacklundError::NotASolution { node: 1 })
        ));
    }

    #[test]
    fn weyl_swap_random_rank_one() {
        // random exact solutions: define the source from the pair, swap,
        // verify, swap back
        let mut rng = SplitMix64::new(77);
        let mut done = 0;
        while done < 20 {
            let zeta = Gauss::int(rng.next_range(-3, 3));
            if zeta.is_zero() {
                continue;
            }
            let mut qp_coeffs: Vec<Gauss> = (0..rng.next_range(1, 2))
                .map(|_| Gauss::int(rng.next_range(-4, 4)))
                .collect();
            qp_coeffs.push(Gauss::one());
            let qp = Poly::new(qp_coeffs);
            let qm = Poly::new(
                (0..=rng.next_range(0, 2))
                    .map(|_| Gauss::int(rng.next_range(-4, 4)))
                    .collect(),
            );
            if qm.is_zero() || !qp.gcd(&qm).is_constant() {
                continue;
            }
            // Lambda := W(q_-, q_+) + <Z,alpha> q_- q_+ makes (q_+, q_-) a solution
            let lam = &crate::poly::wronskian(&qm, &qp)
                + &(&qm * &qp).scale(&(zeta.clone() + zeta.clone()));
            if lam.is_zero() {
                continue;
            }
            let spec = sl2_spec(zeta, lam);
            let sol = sol1(qp, qm);
            let out = weyl_swap(&spec, &sol, 1).unwrap();
            let back = weyl_swap(&out.spec, &out.solution, 1).unwrap();
            assert_eq!(back.spec, spec);
            assert_eq!(back.solution, sol);
            done += 1;
        }
    }

    #[test]
    fn weyl_swap_rank_two_fixture() {
        // sl(3)-type diagram, zeta = (1/3, -1/3), both sources constant one;
        // swapping node 1 keeps node 2 solved with unchanged sources.
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
        let sol = QqSolution::new(vec![
            QqPair::new(p(&[0, 1]), p(&[1])).unwrap(),
            QqPair::new(p(&[-1, 1]), p(&[-1])).unwrap(),
        ]);
        let out = weyl_swap(&spec, &sol, 1).unwrap();
        assert_eq!(
            out.spec.zetas(),
            &[Gauss::ratio(-2, 3), Gauss::ratio(-1, 3)]
        );
        let residuals = residual_qq(&out.spec, &out.solution).unwrap();
        assert!(residuals.iter().all(RatFunc::is_zero));
    }

    #[test]
    fn mu_gauge_examples() {
        // mu = (z-1)^{-1} [ -1/z + 1 ] = 1/z
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let sol = sol1(p(&[0, 1]), p(&[1]));
        let mu = mu_gauge(&spec, &sol, 1).unwrap();
        assert_eq!(mu, RatFunc::new(Poly::one(), p(&[0, 1])).unwrap());

        // q_- = q_+ and <alpha, Z> = 0 gives mu = 0
        let spec0 = sl2_spec(Gauss::zero(), p(&[-1, 1]));
        let same = sol1(p(&[0, 1]), p(&[0, 1]));
        assert!(mu_gauge(&spec0, &same, 1).unwrap().is_zero());

        // scalar ratio: q_- = c q_+ gives mu = <alpha,Z>/source
        let spec2 = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let scaled = sol1(p(&[0, 1]), p(&[0, 3]));
        assert_eq!(
            mu_gauge(&spec2, &scaled, 1).unwrap(),
            RatFunc::new(Poly::one(), p(&[-1, 1])).unwrap()
        );

        // zero source rejected
        let zspec = sl2_spec(Gauss::ratio(1, 2), GPoly::zero());
        assert!(matches!(
            mu_gauge(&zspec, &sol, 1),
            Err(BacklundError::ZeroSource { node: 1 })
        ));
    }

    #[test]
    fn odd_step_sl11_trivial_and_rich() {
        // T = (z, 1): Lambda~ = 1, forced pair (1, 1); the step preserves T
        // and the factorization
        let diagram = arc(Family::Gl11);
        let spec = build_slnm_spec(vec![p(&[0, 1]), p(&[1])], diagram.clone()).unwrap();
        let sol = sol1(p(&[1]), p(&[1]));
        let out = odd_step_slnm(&spec, &sol, 1).unwrap();
        assert_eq!(out.t_after, vec![p(&[0, 1]), p(&[1])]);
        assert!(chains_equal(&out.r_before, &out.r_after).unwrap());
        assert_eq!(
            crate::rootdata::word_to_string(out.spec.diagram().parity_word().unwrap()),
            "-+"
        );

        // T = (z(z-1), 1): Lambda~ = 2z - 1, pair (z - 1/2, 2)
        let spec = build_slnm_spec(vec![&p(&[0, 1]) * &p(&[-1, 1]), p(&[1])], diagram).unwrap();
        let sol = sol1(pr(&[(-1, 2), (1, 1)]), p(&[2]));
        let out = odd_step_slnm(&spec, &sol, 1).unwrap();
        // T unchanged at rank one, pair flipped with the scale recorded in q_-
        assert_eq!(out.t_after, out.t_before);
        assert_eq!(out.solution.pair(1).q_plus(), &p(&[1]));
        assert_eq!(out.solution.pair(1).q_minus(), &p(&[-1, 2]));
        assert!(chains_equal(&out.r_before, &out.r_after).unwrap());
        // the new solution verifies on the new spec
        let residuals = residual_qq(&out.spec, &out.solution).unwrap();
        assert!(residuals.iter().all(RatFunc::is_zero));
    }

    #[test]
    fn odd_step_rejects_broken_grey_equation() {
        let diagram = arc(Family::Gl11);
        let spec = build_slnm_spec(vec![&p(&[0, 1]) * &p(&[-1, 1]), p(&[1])], diagram).unwrap();
        let bad = sol1(pr(&[(-1, 2), (1, 1)]), p(&[3]));
        assert!(matches!(
            odd_step_slnm(&spec, &bad, 1),
            Err(BacklundError::GreyEquationFails { node: 1 })
        ));
        // even nodes are rejected
        let sl2 = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let sol = sol1(p(&[0, 1]), p(&[1]));
        assert!(matches!(
            odd_step_slnm(&sl2, &sol, 1),
            Err(BacklundError::NodeNotGrey { node: 1 })
        ));
    }

    #[test]
    fn populate_words() {
        // empty word: population of one entry
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let sol = sol1(p(&[0, 1]), p(&[1]));
        let pop = populate(&spec, &sol, &[]);
        assert!(pop.completed());
        assert_eq!(pop.entries.len(), 1);

        // word [1, 1] on sl(2): two swaps return to the root exactly
        let pop = populate(&spec, &sol, &[1, 1]);
        assert!(pop.completed());
        assert_eq!(pop.entries.len(), 3);
        assert_eq!(pop.last().spec, spec);
        assert_eq!(pop.last().solution, sol);

        // word [1] on sl(1|1): one odd step flips the parity word
        let diagram = arc(Family::Gl11);
        let gspec =
            build_slnm_spec(vec![&p(&[0, 1]) * &p(&[-1, 1]), p(&[1])], diagram).unwrap();
        let gsol = sol1(pr(&[(-1, 2), (1, 1)]), p(&[2]));
        let pop = populate(&gspec, &gsol, &[1]);
        assert!(pop.completed(), "error: {:?}", pop.error);
        assert_eq!(
            crate::rootdata::word_to_string(
                pop.last().spec.diagram().parity_word().unwrap()
            ),
            "-+"
        );
        assert_eq!(pop.steps[0].kind, StepKind::OddReflection);

        // aborted word keeps the prefix
        let bad_sol = sol1(p(&[0, 1]), p(&[5]));
        let pop = populate(&spec, &bad_sol, &[1, 1]);
        assert!(!pop.completed());
        assert_eq!(pop.entries.len(), 1);
    }

    #[test]
    fn double_odd_step_is_an_involution() {
        // two odd steps at the same node return the root data exactly,
        // including the T polynomials
        let diagram = arc(Family::Gl11);
        let spec = build_slnm_spec(
            vec![&p(&[0, 1]) * &p(&[-1, 1]), p(&[1])],
            diagram,
        )
        .unwrap();
        let sol = sol1(pr(&[(-1, 2), (1, 1)]), p(&[2]));
        let pop = populate(&spec, &sol, &[1, 1]);
        assert!(pop.completed(), "error: {:?}", pop.error);
        assert_eq!(pop.last().spec, spec);
        assert_eq!(pop.last().solution, sol);
    }

    #[test]
    fn sl21_exchange_preserves_r() {
        // T = (z, 1, 1) with degree-<=1 data satisfying the grey equation:
        // q_+^1 = z + beta, Lambda~_2 = (q_+^1)' = 1, pair (1, 1).
        for beta in [-2i64, 0, 3] {
            let diagram = Arc::new(DynkinDiagram::build(Family::Slnm { n: 2, m: 1 }).unwrap());
            let spec =
                build_slnm_spec(vec![p(&[0, 1]), p(&[1]), p(&[1])], diagram).unwrap();
            let sol = QqSolution::new(vec![
                QqPair::new(p(&[beta, 1]), p(&[1])).unwrap(),
                QqPair::new(p(&[1]), p(&[1])).unwrap(),
            ]);
            match odd_step_slnm(&spec, &sol, 2) {
                Ok(out) => {
                    assert_eq!(
                        out.spec.diagram().colors(),
                        &[NodeColor::Grey, NodeColor::Grey]
                    );
                    assert!(chains_equal(&out.r_before, &out.r_after).unwrap());
                }
                Err(BacklundError::NotComposable { .. }) => {
                    // the transported q data need not solve the reflected
                    // system for arbitrary fixtures; the exchange itself is
                    // still verified against the chains directly below
                    let word = spec.diagram().parity_word().unwrap().to_vec();
                    let t = spec.t_data().unwrap().to_vec();
                    let r = crate::psdo::build_r_parts(
                        &word,
                        &t,
                        &[p(&[beta, 1]), p(&[1])],
                    )
                    .unwrap();
                    // reflected word with swapped signs and the same data
                    let mut wr = word.clone();
                    wr.swap(1, 2);
                    let rw =
                        crate::psdo::build_r_parts(&wr, &t, &[p(&[beta, 1]), p(&[1])])
                            .unwrap();
                    assert!(chains_equal(&r, &rw).unwrap());
                }
                Err(e) => panic!("unexpected odd step failure: {e}"),
            }
        }
    }
}
