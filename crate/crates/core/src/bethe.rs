//! Bethe equations generated from a system instance, a multi-start damped
//! Newton solver over complex doubles, and the reconstruction of qq-solution
//! data from Bethe roots.
//!
//! Even-type equations live at white/black nodes. The printed logarithmic
//! form diverges at the root itself, so the implemented finite form drops
//! the self-interaction of the `(z - w)^2` factor into the standard pairwise
//! term:
//!
//! `<alpha_i, Z> + [F_i'/F_i](w) - sum_{l' != l} 2/(w_l - w_l') = 0`.
//!
//! Odd-type equations live at grey nodes and are the divisibility condition
//! `q_+^i | L~_i`; at simple roots this is the vanishing of the logarithmic
//! derivative of the grey source argument (for deferred family sources) or
//! of the source polynomial itself (for explicit ones).

use crate::linalg;
use crate::poly::{Poly, PolyError};
use crate::qqsystem::{
    build_f_parts, build_slnm_spec, resolve_grey_source, QqError, QqPair, QqSolution, QqSpec,
};
use crate::ratfunc::RatFunc;
use crate::rootdata::{DynkinDiagram, Family, NodeColor};
use crate::scalar::{gauss_from_complex, Gauss, Scalar, SplitMix64};
use crate::{Complex64, GPoly};
use num_traits::{One, Zero};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum BetheError {
    Qq(QqError),
    Poly(PolyError),
    /// A candidate root sits on a pole or zero of the node data.
    PoleAtRoot { node: usize, ell: usize },
    /// Two roots of one node collide.
    RootCollision { node: usize },
    DegreeMismatch { expected: usize, got: usize },
    /// Grey division left a remainder or an even linear system had no solution.
    NotASolution { node: usize },
}

impl fmt::Display for BetheError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetheError::Qq(e) => write!(f, "{e}"),
            BetheError::Poly(e) => write!(f, "{e}"),
            BetheError::PoleAtRoot { node, ell } => {
                write!(f, "root {ell} of node {node} hits a singular point of the source")
            }
            BetheError::RootCollision { node } => write!(f, "colliding roots at node {node}"),
            BetheError::DegreeMismatch { expected, got } => {
                write!(f, "expected {expected} root multisets, got {got}")
            }
            BetheError::NotASolution { node } => {
                write!(f, "roots do not extend to a qq-solution at node {node}")
            }
        }
    }
}

impl std::error::Error for BetheError {}

impl From<QqError> for BetheError {
    fn from(e: QqError) -> Self {
        BetheError::Qq(e)
    }
}

impl From<crate::rootdata::RootError> for BetheError {
    fn from(e: crate::rootdata::RootError) -> Self {
        BetheError::Qq(QqError::Root(e))
    }
}

impl From<PolyError> for BetheError {
    fn from(e: PolyError) -> Self {
        BetheError::Poly(e)
    }
}

// ---------------------------------------------------------------------------
// Roots and singularity data
// ---------------------------------------------------------------------------

/// Candidate Bethe roots: one multiset per node, the roots of `q_+^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetheRoots<K: Scalar> {
    pub nodes: Vec<Vec<K>>,
}

impl<K: Scalar> BetheRoots<K> {
    pub fn new(nodes: Vec<Vec<K>>) -> Self {
        BetheRoots { nodes }
    }

    pub fn q_plus(&self) -> Vec<Poly<K>> {
        self.nodes.iter().map(|ws| Poly::from_roots(ws)).collect()
    }

    pub fn total(&self) -> usize {
        self.nodes.iter().map(Vec::len).sum()
    }

    pub fn map<L: Scalar>(&self, f: &impl Fn(&K) -> L) -> BetheRoots<L> {
        BetheRoots {
            nodes: self
                .nodes
                .iter()
                .map(|ws| ws.iter().map(f).collect())
                .collect(),
        }
    }
}

/// Regular-singularity data: distinct points `z_k` with positive weights
/// `d_k`, encoding `Lambda = prod (z - z_k)^{d_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityData {
    points: Vec<(Gauss, u32)>,
}

impl SingularityData {
    pub fn new(points: Vec<(Gauss, u32)>) -> Result<Self, BetheError> {
        for (i, (z, d)) in points.iter().enumerate() {
            if *d == 0 {
                return Err(BetheError::NotASolution { node: i + 1 });
            }
            for (w, _) in &points[..i] {
                if z == w {
                    return Err(BetheError::RootCollision { node: i + 1 });
                }
            }
        }
        Ok(SingularityData { points })
    }

    pub fn points(&self) -> &[(Gauss, u32)] {
        &self.points
    }

    /// `prod (z - z_k)^{d_k}`.
    pub fn lambda(&self) -> GPoly {
        let mut acc = GPoly::one();
        for (z, d) in &self.points {
            let lin = Poly::new(vec![-z.clone(), Gauss::one()]);
            acc = &acc * &lin.pow(*d as usize);
        }
        acc
    }

    /// `prod (z - z_k)`, the radical of `lambda`.
    pub fn pi(&self) -> GPoly {
        Poly::from_roots(&self.points.iter().map(|(z, _)| z.clone()).collect::<Vec<_>>())
    }

    /// `sum_k d_k prod_{j != k} (z - z_j)`: the numerator of
    /// `ln'(Lambda)`, computed without any rational reduction.
    pub fn lambda_tilde(&self) -> GPoly {
        let mut acc = GPoly::zero();
        for (k, (_, d)) in self.points.iter().enumerate() {
            let others: Vec<Gauss> = self
                .points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, (z, _))| z.clone())
                .collect();
            acc = &acc + &Poly::from_roots(&others).scale(&Gauss::int(*d as i64));
        }
        acc
    }
}

/// gl(1|1) system from singularity data, through the sl(n|m) builder at
/// `T = (Lambda, 1)`.
pub fn gl11_spec(sing: &SingularityData) -> Result<QqSpec<Gauss>, QqError> {
    let diagram = Arc::new(DynkinDiagram::build(Family::Gl11)?);
    build_slnm_spec(vec![sing.lambda(), GPoly::one()], diagram)
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

/// Grey fractions `q^j = (L~_j / q_+^j) / q_+^j` from root data alone; the
/// odd equations determine `q_-^j` by division, and as a rational function
/// the quotient is exactly `L~_j / (q_+^j)^2`.
fn grey_fractions_from_roots<K: Scalar>(
    spec: &QqSpec<K>,
    q_plus: &[Poly<K>],
) -> Result<Vec<Option<RatFunc<K>>>, QqError> {
    let diagram = spec.diagram();
    let mut out = Vec::with_capacity(diagram.rank());
    for node in diagram.nodes() {
        if diagram.color(node)? == NodeColor::Grey {
            let lt = resolve_grey_source(spec, q_plus, node)?;
            let qp = &q_plus[node - 1];
            out.push(Some(RatFunc::new(lt, qp * qp)?));
        } else {
            out.push(None);
        }
    }
    Ok(out)
}

/// All Bethe residuals for the candidate roots, stacked node-major.
pub fn residual_vector<K: Scalar>(
    spec: &QqSpec<K>,
    roots: &BetheRoots<K>,
) -> Result<Vec<K>, BetheError> {
    let diagram = spec.diagram();
    if roots.nodes.len() != diagram.rank() {
        return Err(BetheError::DegreeMismatch {
            expected: diagram.rank(),
            got: roots.nodes.len(),
        });
    }
    let q_plus = roots.q_plus();
    let grey_q = grey_fractions_from_roots(spec, &q_plus)?;
    let mut out = Vec::with_capacity(roots.total());
    for node in diagram.nodes() {
        let ws = &roots.nodes[node - 1];
        if diagram.color(node)? == NodeColor::Grey {
            let values = grey_residuals(spec, &q_plus, node, ws)?;
            out.extend(values);
        } else {
            let f = build_f_parts(spec, &q_plus, &grey_q, node)?;
            let logf = f
                .log_derivative()
                .map_err(|_| BetheError::PoleAtRoot { node, ell: 0 })?;
            let c = spec.pairing(node)?;
            for (ell, w) in ws.iter().enumerate() {
                let at = logf
                    .eval(w)
                    .ok_or(BetheError::PoleAtRoot { node, ell: ell + 1 })?;
                let mut acc = c.clone() + at;
                for (ell2, w2) in ws.iter().enumerate() {
                    if ell2 == ell {
                        continue;
                    }
                    let diff = w.clone() - w2.clone();
                    if diff.is_zero() {
                        return Err(BetheError::RootCollision { node });
                    }
                    acc = acc - K::from_int(2) / diff;
                }
                out.push(acc);
            }
        }
    }
    Ok(out)
}

fn grey_residuals<K: Scalar>(
    spec: &QqSpec<K>,
    q_plus: &[Poly<K>],
    node: usize,
    ws: &[K],
) -> Result<Vec<K>, BetheError> {
    use crate::qqsystem::{GreySource, NodeSource};
    let source = match spec.source(node) {
        NodeSource::Grey(s) => s,
        NodeSource::Even { .. } => return Err(BetheError::Qq(QqError::GreyNodePassed(node))),
    };
    match source {
        // explicit polynomial source: the odd equation at simple roots is
        // its vanishing
        GreySource::Explicit(p) => Ok(ws.iter().map(|w| p.eval(w)).collect()),
        // deferred sources: evaluate the logarithmic derivative of the
        // argument, the displayed odd-type equation
        GreySource::DeferredSlnm | GreySource::DeferredOsp => {
            let lt = resolve_grey_source(spec, q_plus, node)?;
            // L~ = ln'(arg) * tail; recover ln'(arg) = L~ / tail and read it
            // at the root. tail is the product multiplier of the formula.
            let tail = grey_tail(spec, q_plus, node)?;
            let frac = RatFunc::new(lt, tail)?;
            ws.iter()
                .enumerate()
                .map(|(ell, w)| {
                    frac.eval(w)
                        .ok_or(BetheError::PoleAtRoot { node, ell: ell + 1 })
                })
                .collect()
        }
    }
}

/// The polynomial multiplier of the deferred grey formulas: `pi q_+^{i+1}
/// q_+^{i-1}` for sl(n|m), `pi prod_{c_ij != 0} q_+^j` for osp.
fn grey_tail<K: Scalar>(
    spec: &QqSpec<K>,
    q_plus: &[Poly<K>],
    node: usize,
) -> Result<Poly<K>, BetheError> {
    use crate::poly::squarefree_radical;
    use crate::qqsystem::{GreySource, NodeSource};
    let diagram = spec.diagram();
    let at = |pos: usize| -> Poly<K> {
        if pos == 0 || pos > q_plus.len() {
            Poly::one()
        } else {
            q_plus[pos - 1].clone()
        }
    };
    match spec.source(node) {
        NodeSource::Grey(GreySource::DeferredSlnm) => {
            let t = spec
                .t_data()
                .ok_or(BetheError::Qq(QqError::MissingFamilyData("T")))?;
            let pi = squarefree_radical(&(&t[node - 1] * &t[node]))?;
            Ok(&(&pi * &at(node + 1)) * &at(node - 1))
        }
        NodeSource::Grey(GreySource::DeferredOsp) => {
            let lambdas = spec
                .osp_lambda()
                .ok_or(BetheError::Qq(QqError::MissingFamilyData("Lambda")))?;
            let mut tail = squarefree_radical(&lambdas[node - 1])?;
            for j in diagram.nodes() {
                if !spec.diagram().cartan(node, j).map_err(QqError::from)?.is_zero() {
                    tail = &tail * &at(j);
                }
            }
            Ok(tail)
        }
        _ => Err(BetheError::Qq(QqError::UnresolvableSource(node))),
    }
}

/// One Bethe residual, node and root indices 1-based.
pub fn bethe_residual<K: Scalar>(
    spec: &QqSpec<K>,
    roots: &BetheRoots<K>,
    node: usize,
    ell: usize,
) -> Result<K, BetheError> {
    let all = residual_vector(spec, roots)?;
    let mut offset = 0;
    for n in 1..node {
        offset += roots.nodes[n - 1].len();
    }
    Ok(all[offset + ell - 1].clone())
}

// ---------------------------------------------------------------------------
// Multi-start damped Newton solver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Max-norm residual bound a solution must meet.
    pub tol: f64,
    /// Number of random starts.
    pub starts: usize,
    /// Newton iteration budget per start.
    pub max_iter: usize,
    /// Seed of the deterministic start sampler.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            starts: 64,
            max_iter: 60,
            seed: 1,
        }
    }
}

/// Distinct root assignments match within this distance under optimal
/// pairing; the permutation gauge of root labels.
pub const DEDUP_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BetheSolveOutcome {
    /// Deduplicated solutions, roots sorted per node (real, then imaginary),
    /// solutions sorted lexicographically.
    pub solutions: Vec<BetheRoots<Complex64>>,
    pub starts_run: usize,
    pub converged: usize,
    pub stalled: usize,
}

fn flatten(roots: &BetheRoots<Complex64>) -> Vec<Complex64> {
    roots.nodes.iter().flatten().cloned().collect()
}

fn unflatten(degrees: &[usize], x: &[Complex64]) -> BetheRoots<Complex64> {
    let mut nodes = Vec::with_capacity(degrees.len());
    let mut k = 0;
    for &d in degrees {
        nodes.push(x[k..k + d].to_vec());
        k += d;
    }
    BetheRoots::new(nodes)
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn sort_roots(ws: &mut [Complex64]) {
    ws.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// Optimal-assignment match of two multisets within `tol`.
fn multisets_match(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len();
    if n == 0 {
        return true;
    }
    // try all assignments for small multisets; greedy fallback above that
    if n <= 6 {
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            if perm
                .iter()
                .enumerate()
                .all(|(i, &j)| (a[i] - b[j]).norm() <= tol)
            {
                return true;
            }
            // next permutation
            let mut i = n.wrapping_sub(1);
            while i > 0 && perm[i - 1] >= perm[i] {
                i -= 1;
            }
            if i == 0 {
                return false;
            }
            let mut j = n - 1;
            while perm[j] <= perm[i - 1] {
                j -= 1;
            }
            perm.swap(i - 1, j);
            perm[i..].reverse();
        }
    } else {
        let mut used = vec![false; n];
        'outer: for x in a {
            for (j, y) in b.iter().enumerate() {
                if !used[j] && (x - y).norm() <= tol {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
}

fn solutions_match(a: &BetheRoots<Complex64>, b: &BetheRoots<Complex64>, tol: f64) -> bool {
    a.nodes.len() == b.nodes.len()
        && a.nodes
            .iter()
            .zip(&b.nodes)
            .all(|(x, y)| multisets_match(x, y, tol))
}

/// Multi-start damped Newton iteration on the stacked residual map.
///
/// Returns every distinct converged solution; an empty list plus the
/// diagnostics when nothing converges. Starts are sampled deterministically
/// from the seed, and the outcome is canonically sorted, so reruns and
/// reseedings agree on the solution set.
pub fn solve_bethe(
    spec: &QqSpec<Gauss>,
    degrees: &[usize],
    config: &SolverConfig,
) -> Result<BetheSolveOutcome, BetheError> {
    let rank = spec.diagram().rank();
    if degrees.len() != rank {
        return Err(BetheError::DegreeMismatch {
            expected: rank,
            got: degrees.len(),
        });
    }
    let cspec = spec.to_complex();
    let n_unknowns: usize = degrees.iter().sum();
    if n_unknowns == 0 {
        return Ok(BetheSolveOutcome {
            solutions: vec![BetheRoots::new(vec![Vec::new(); rank])],
            starts_run: 0,
            converged: 0,
            stalled: 0,
        });
    }

    let eval = |x: &[Complex64]| -> Option<Vec<Complex64>> {
        let roots = unflatten(degrees, x);
        residual_vector(&cspec, &roots).ok().filter(|r| {
            r.iter().all(|c| c.re.is_finite() && c.im.is_finite())
        })
    };

    let mut rng = SplitMix64::new(config.seed);
    let mut solutions: Vec<BetheRoots<Complex64>> = Vec::new();
    let mut converged = 0;
    let mut stalled = 0;

    for _ in 0..config.starts {
        let mut x: Vec<Complex64> = (0..n_unknowns)
            .map(|_| Complex64::new(2.5 * rng.next_signed_unit(), 2.5 * rng.next_signed_unit()))
            .collect();
        let Some(mut r) = eval(&x) else {
            stalled += 1;
            continue;
        };
        let mut ok = false;
        for _ in 0..config.max_iter {
            let rnorm = max_norm(&r);
            if rnorm <= config.tol {
                ok = true;
                break;
            }
            // forward-difference Jacobian; the residual map is holomorphic
            // in the roots
            let h = 1e-7;
            let mut jac = vec![vec![Complex64::zero(); n_unknowns]; n_unknowns];
            let mut bad = false;
            for m in 0..n_unknowns {
                let mut xh = x.clone();
                xh[m] += Complex64::new(h, 0.0);
                let Some(rh) = eval(&xh) else {
                    bad = true;
                    break;
                };
                for k in 0..n_unknowns {
                    jac[k][m] = (rh[k] - r[k]) / h;
                }
            }
            if bad {
                break;
            }
            let rhs: Vec<Complex64> = r.iter().map(|c| -c).collect();
            let Ok(step) = linalg::solve(jac, rhs, 1e-13) else {
                break;
            };
            // damping by step halving
            let mut t = 1.0;
            let mut advanced = false;
            while t > 1e-6 {
                let cand: Vec<Complex64> = x
                    .iter()
                    .zip(&step.particular)
                    .map(|(xi, di)| xi + di * Complex64::new(t, 0.0))
                    .collect();
                if let Some(rc) = eval(&cand) {
                    if max_norm(&rc) < rnorm {
                        x = cand;
                        r = rc;
                        advanced = true;
                        break;
                    }
                }
                t /= 2.0;
            }
            if !advanced {
                break;
            }
        }
        if !(ok || max_norm(&r) <= config.tol) {
            stalled += 1;
            continue;
        }
        converged += 1;
        let mut roots = unflatten(degrees, &x);
        for ws in &mut roots.nodes {
            sort_roots(ws);
        }
        if !solutions.iter().any(|s| solutions_match(s, &roots, DEDUP_TOL)) {
            solutions.push(roots);
        }
    }

    solutions.sort_by(|a, b| {
        let fa = flatten(a);
        let fb = flatten(b);
        fa.iter()
            .map(|c| (c.re, c.im))
            .partial_cmp(fb.iter().map(|c| (c.re, c.im)))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    Ok(BetheSolveOutcome {
        solutions,
        starts_run: config.starts,
        converged,
        stalled,
    })
}

// ---------------------------------------------------------------------------
// Roots -> qq-solution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BetheToQq<K: Scalar> {
    pub solution: QqSolution<K>,
    /// Kernel dimension of each even node's linear system (0 at grey nodes);
    /// nonzero entries flag a degenerate twist or degenerate roots.
    pub kernel_dims: Vec<usize>,
}

/// Builds `q_+^i` from the roots and recovers `q_-^i`: by division at grey
/// nodes, by solving the linear Wronskian system at even nodes. `eps` is the
/// negligibility threshold handed to the linear algebra (0 for exact data).
pub fn qq_from_bethe<K: Scalar>(
    spec: &QqSpec<K>,
    roots: &BetheRoots<K>,
    eps: f64,
) -> Result<BetheToQq<K>, BetheError> {
    let diagram = spec.diagram();
    if roots.nodes.len() != diagram.rank() {
        return Err(BetheError::DegreeMismatch {
            expected: diagram.rank(),
            got: roots.nodes.len(),
        });
    }
    let q_plus = roots.q_plus();

    // grey nodes first: q_- by division
    let mut q_minus: Vec<Option<Poly<K>>> = vec![None; diagram.rank()];
    for node in diagram.nodes() {
        if diagram.color(node)? != NodeColor::Grey {
            continue;
        }
        let lt = resolve_grey_source(spec, &q_plus, node)?;
        let (quot, rem) = lt.div_rem(&q_plus[node - 1])?;
        let rem_ok = if K::EXACT {
            rem.is_zero()
        } else {
            rem.coeffs().iter().all(|c| c.magnitude() <= eps.max(1e-8))
        };
        if !rem_ok {
            return Err(BetheError::NotASolution { node });
        }
        q_minus[node - 1] = Some(quot);
    }

    let grey_q: Vec<Option<RatFunc<K>>> = diagram
        .nodes()
        .map(|n| {
            q_minus[n - 1].as_ref().map(|qm| {
                RatFunc::new(qm.clone(), q_plus[n - 1].clone()).expect("monic denominator")
            })
        })
        .collect();

    let mut kernel_dims = vec![0usize; diagram.rank()];
    for node in diagram.nodes() {
        if diagram.color(node)? == NodeColor::Grey {
            continue;
        }
        let f = build_f_parts(spec, &q_plus, &grey_q, node)?;
        let c = spec.pairing(node)?;
        let qp = &q_plus[node - 1];
        let d = qp.degree().expect("monic q_plus");
        let num = f.num();
        let den = f.den();
        let num_deg = num.degree().map_or(0, |x| x as i64);
        let den_deg = den.degree().map_or(0, |x| x as i64);
        let extra = if c.is_zero() { 1 } else { 0 };
        let dq = (num_deg - den_deg - d as i64 + extra).max(0) as usize;
        let rows = ((dq + d) as i64 + den_deg).max(num_deg) as usize + 1;
        // columns: the linear operator applied to z^k, times den(F)
        let mut a = vec![vec![K::zero(); dq + 1]; rows];
        for k in 0..=dq {
            let zk = Poly::monomial(K::one(), k);
            let lhs = &crate::poly::wronskian(&zk, qp) + &(&zk * qp).scale(&c);
            let col = &lhs * den;
            for (row, aij) in a.iter_mut().enumerate() {
                aij[k] = col.coeff(row);
            }
        }
        let b: Vec<K> = (0..rows).map(|row| num.coeff(row)).collect();
        let solved = linalg::solve(a, b, eps).map_err(|_| BetheError::NotASolution { node })?;
        kernel_dims[node - 1] = solved.kernel_dim;
        q_minus[node - 1] = Some(Poly::new(solved.particular));
    }

    let pairs = diagram
        .nodes()
        .map(|n| {
            QqPair::new(
                q_plus[n - 1].clone(),
                q_minus[n - 1].clone().expect("all nodes filled"),
            )
            .map_err(BetheError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let solution = QqSolution::new(pairs);

    if K::EXACT {
        let residuals = crate::qqsystem::residual_qq(spec, &solution)?;
        if let Some(node) = residuals.iter().position(|r| !r.is_zero()) {
            return Err(BetheError::NotASolution { node: node + 1 });
        }
    }
    Ok(BetheToQq {
        solution,
        kernel_dims,
    })
}

/// Max coefficient magnitude over the numerators of the residuals; the
/// denominators are monic, so this bounds the residual size.
pub fn residual_max_norm<K: Scalar>(residuals: &[RatFunc<K>]) -> f64 {
    residuals
        .iter()
        .flat_map(|r| r.num().coeffs())
        .map(Scalar::magnitude)
        .fold(0.0, f64::max)
}

/// Snaps floating roots to Gaussian rationals; `None` when any root has no
/// nearby small rational.
pub fn rationalize_roots(
    roots: &BetheRoots<Complex64>,
    max_den: u64,
    tol: f64,
) -> Option<BetheRoots<Gauss>> {
    let nodes = roots
        .nodes
        .iter()
        .map(|ws| {
            ws.iter()
                .map(|w| gauss_from_complex(*w, max_den, tol))
                .collect::<Option<Vec<_>>>()
        })
        .collect::<Option<Vec<_>>>()?;
    Some(BetheRoots::new(nodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qqsystem::{NodeSource, QqSpec};
    use crate::rootdata::{DynkinDiagram, Family};

    fn p(coeffs: &[i64]) -> GPoly {
        Poly::new(coeffs.iter().map(|&c| Gauss::int(c)).collect())
    }

    fn arc(f: Family) -> Arc<DynkinDiagram> {
        Arc::new(DynkinDiagram::build(f).unwrap())
    }

    fn sl2_spec(zeta: Gauss, lambda: GPoly) -> QqSpec<Gauss> {
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

    #[test]
    fn singularity_data_reconstructs_lambda() {
        let sing = SingularityData::new(vec![
            (Gauss::zero(), 2),
            (Gauss::int(1), 1),
            (Gauss::int(-2), 3),
        ])
        .unwrap();
        let lam = sing.lambda();
        // radical and weights reconstruct the polynomial
        assert_eq!(
            lam,
            &(&Poly::var().pow(2) * &p(&[-1, 1])) * &p(&[2, 1]).pow(3)
        );
        // Lambda~ matches the ln'(Lambda) pi route exactly
        let via_logderiv = &RatFunc::from_poly(lam.clone()).log_derivative().unwrap()
            * &RatFunc::from_poly(sing.pi());
        assert_eq!(RatFunc::from_poly(sing.lambda_tilde()), via_logderiv);
        // duplicate points rejected
        assert!(SingularityData::new(vec![(Gauss::zero(), 1), (Gauss::zero(), 2)]).is_err());
    }

    #[test]
    fn sl2_residual_examples() {
        // zeta = 1/2, Lambda = z - 1, w = 0: 1 + 1/(0-1) = 0
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let roots = BetheRoots::new(vec![vec![Gauss::zero()]]);
        assert_eq!(bethe_residual(&spec, &roots, 1, 1).unwrap(), Gauss::zero());

        // zeta = 0, Lambda = z^2 - 1, w = 0: 1/(0-1) + 1/(0+1) = 0
        let spec = sl2_spec(Gauss::zero(), p(&[-1, 0, 1]));
        assert_eq!(bethe_residual(&spec, &roots, 1, 1).unwrap(), Gauss::zero());

        // a root on a singular point errors
        let roots_on_pole = BetheRoots::new(vec![vec![Gauss::int(1)]]);
        assert!(matches!(
            bethe_residual(&spec, &roots_on_pole, 1, 1),
            Err(BetheError::PoleAtRoot { .. })
        ));
    }

    #[test]
    fn gl11_residual_is_displayed_sum() {
        // z_1 = 0, z_2 = 1, d = 1: residual at w is 1/w + 1/(w-1)
        let sing =
            SingularityData::new(vec![(Gauss::zero(), 1), (Gauss::int(1), 1)]).unwrap();
        let spec = gl11_spec(&sing).unwrap();
        let w = Gauss::ratio(1, 2);
        let roots = BetheRoots::new(vec![vec![w.clone()]]);
        assert_eq!(bethe_residual(&spec, &roots, 1, 1).unwrap(), Gauss::zero());
        // off the solution the value is the displayed sum
        let roots = BetheRoots::new(vec![vec![Gauss::int(2)]]);
        // 1/2 + 1/(2-1) = 3/2
        assert_eq!(
            bethe_residual(&spec, &roots, 1, 1).unwrap(),
            Gauss::ratio(3, 2)
        );
    }

    #[test]
    fn solve_bethe_sl2_unique_root() {
        let spec = sl2_spec(Gauss::zero(), p(&[-1, 0, 1]));
        let out = solve_bethe(&spec, &[1], &SolverConfig::default()).unwrap();
        assert_eq!(out.solutions.len(), 1, "converged {}", out.converged);
        let w = out.solutions[0].nodes[0][0];
        assert!(w.norm() <= 1e-8, "root {w}");
    }

    #[test]
    fn solve_bethe_gl11_half() {
        let sing =
            SingularityData::new(vec![(Gauss::zero(), 1), (Gauss::int(1), 1)]).unwrap();
        let spec = gl11_spec(&sing).unwrap();
        let out = solve_bethe(&spec, &[1], &SolverConfig::default()).unwrap();
        assert_eq!(out.solutions.len(), 1);
        let w = out.solutions[0].nodes[0][0];
        assert!((w - Complex64::new(0.5, 0.0)).norm() <= 1e-10);
    }

    #[test]
    fn degree_zero_everywhere_is_vacuous() {
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let out = solve_bethe(&spec, &[0], &SolverConfig::default()).unwrap();
        assert_eq!(out.solutions.len(), 1);
        assert!(out.solutions[0].nodes[0].is_empty());
        let exact = out.solutions[0].map(&|c| {
            Gauss::from_rational(crate::scalar::rational_from_f64(c.re, 10, 1e-9).unwrap())
        });
        assert!(residual_vector(&spec, &exact).unwrap().is_empty());
    }

    #[test]
    fn qq_from_bethe_examples() {
        // sl(2), zeta = 1/2, w = 0 -> q_+ = z, q_- = 1
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let roots = BetheRoots::new(vec![vec![Gauss::zero()]]);
        let out = qq_from_bethe(&spec, &roots, 0.0).unwrap();
        assert_eq!(out.kernel_dims, vec![0]);
        assert_eq!(out.solution.pair(1).q_plus(), &p(&[0, 1]));
        assert_eq!(out.solution.pair(1).q_minus(), &p(&[1]));

        // sl(2), zeta = 0, Lambda = z^2 - 1, w = 0: kernel dimension 1 and
        // the particular solution q_- = z^2 + 1
        let spec = sl2_spec(Gauss::zero(), p(&[-1, 0, 1]));
        let out = qq_from_bethe(&spec, &roots, 0.0).unwrap();
        assert_eq!(out.kernel_dims, vec![1]);
        assert_eq!(out.solution.pair(1).q_minus(), &p(&[1, 0, 1]));

        // gl(1|1), w = 1/2 -> q_+ = z - 1/2, q_- = 2 by division
        let sing =
            SingularityData::new(vec![(Gauss::zero(), 1), (Gauss::int(1), 1)]).unwrap();
        let spec = gl11_spec(&sing).unwrap();
        let roots = BetheRoots::new(vec![vec![Gauss::ratio(1, 2)]]);
        let out = qq_from_bethe(&spec, &roots, 0.0).unwrap();
        assert_eq!(out.solution.pair(1).q_minus(), &p(&[2]));

        // a non-root leaves a grey remainder
        let bad = BetheRoots::new(vec![vec![Gauss::int(3)]]);
        assert!(matches!(
            qq_from_bethe(&spec, &bad, 0.0),
            Err(BetheError::NotASolution { node: 1 })
        ));
    }

    #[test]
    fn roundtrip_solver_to_exact_solution() {
        let spec = sl2_spec(Gauss::ratio(1, 2), p(&[-1, 1]));
        let out = solve_bethe(&spec, &[1], &SolverConfig::default()).unwrap();
        assert_eq!(out.solutions.len(), 1);
        let exact = rationalize_roots(&out.solutions[0], 1 << 20, 1e-6).unwrap();
        let qq = qq_from_bethe(&spec, &exact, 0.0).unwrap();
        let res = crate::qqsystem::residual_qq(&spec, &qq.solution).unwrap();
        assert!(res.iter().all(RatFunc::is_zero));
    }

    #[test]
    fn rank_two_exact_roots_have_zero_residual() {
        // pure-even rank-2 solution with known roots: node 1 root 0,
        // node 2 root 1 (the shipped coupled fixture)
        use crate::qqsystem::QqPair;
        use crate::rootdata::Family;
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
        let sol = crate::qqsystem::QqSolution::new(vec![
            QqPair::new(p(&[0, 1]), p(&[1])).unwrap(),
            QqPair::new(p(&[-1, 1]), p(&[-1])).unwrap(),
        ]);
        assert!(crate::qqsystem::residual_qq(&spec, &sol)
            .unwrap()
            .iter()
            .all(RatFunc::is_zero));
        let roots = BetheRoots::new(vec![vec![Gauss::zero()], vec![Gauss::int(1)]]);
        for (node, ell) in [(1, 1), (2, 1)] {
            let r = bethe_residual(&spec, &roots, node, ell).unwrap();
            assert!(r.is_zero(), "node {node} residual {r}");
        }
    }

    #[test]
    fn seed_permutation_leaves_solution_set_fixed() {
        let spec = sl2_spec(Gauss::zero(), p(&[-1, 0, 1]));
        let a = solve_bethe(&spec, &[1], &SolverConfig::default()).unwrap();
        let b = solve_bethe(
            &spec,
            &[1],
            &SolverConfig {
                seed: 987,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a.solutions.len(), b.solutions.len());
        for (x, y) in a.solutions.iter().zip(&b.solutions) {
            assert!(solutions_match(x, y, DEDUP_TOL));
        }
    }
}
