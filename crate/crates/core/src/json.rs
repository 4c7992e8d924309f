//! Batch file formats: system specs, solutions, Bethe roots, factor chains,
//! connections, and run reports.
//!
//! Every exact number is a string holding the scalar's canonical form
//! (`"3/2"`, `"1/2+3/4i"`); Bethe roots are decimal floats. Polynomials are
//! coefficient lists, lowest degree first; the zero polynomial is the empty
//! list. Rational functions carry `num`/`den` lists, with plain `coeffs`
//! accepted (and emitted) for polynomial values.
//!
//! Canonical serialization is pretty-printed with two-space indentation and
//! a trailing newline; parsing followed by canonical serialization is
//! byte-stable on canonical files.

use crate::poly::Poly;
use crate::qqsystem::{GreySource, NodeSource, PqNode, PqSolution, QqPair, QqSolution, QqSpec};
use crate::ratfunc::RatFunc;
use crate::rootdata::{
    word_from_string, word_to_string, DynkinDiagram, Family, NodeColor, RootError,
};
use crate::scalar::Gauss;
use crate::{Complex64, ExactSolution, ExactSpec, GPoly, GRatFunc, Rat};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug)]
pub enum JsonError {
    Parse(serde_json::Error),
    Scalar(String),
    Structure(String),
}

impl fmt::Display for JsonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JsonError::Parse(e) => write!(f, "malformed JSON: {e}"),
            JsonError::Scalar(s) => write!(f, "malformed scalar: {s}"),
            JsonError::Structure(s) => write!(f, "malformed document: {s}"),
        }
    }
}

impl std::error::Error for JsonError {}

impl From<serde_json::Error> for JsonError {
    fn from(e: serde_json::Error) -> Self {
        JsonError::Parse(e)
    }
}

impl From<RootError> for JsonError {
    fn from(e: RootError) -> Self {
        JsonError::Structure(e.to_string())
    }
}

impl From<crate::qqsystem::QqError> for JsonError {
    fn from(e: crate::qqsystem::QqError) -> Self {
        JsonError::Structure(e.to_string())
    }
}

fn structure(msg: impl Into<String>) -> JsonError {
    JsonError::Structure(msg.into())
}

// ---------------------------------------------------------------------------
// Scalar and polynomial codecs
// ---------------------------------------------------------------------------

pub fn scalar_to_string(g: &Gauss) -> String {
    g.to_string()
}

pub fn scalar_from_string(s: &str) -> Result<Gauss, JsonError> {
    Gauss::from_str(s).map_err(|e| JsonError::Scalar(e.to_string()))
}

pub fn poly_to_strings(p: &GPoly) -> Vec<String> {
    p.coeffs().iter().map(scalar_to_string).collect()
}

pub fn poly_from_strings(coeffs: &[String]) -> Result<GPoly, JsonError> {
    let cs = coeffs
        .iter()
        .map(|s| scalar_from_string(s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Poly::new(cs))
}

/// Rational function as `coeffs` (polynomial) or `num`/`den`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RatFuncJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub den: Option<Vec<String>>,
}

impl RatFuncJson {
    pub fn from_ratfunc(f: &GRatFunc) -> Self {
        if f.is_polynomial() {
            RatFuncJson {
                coeffs: Some(poly_to_strings(f.num())),
                num: None,
                den: None,
            }
        } else {
            RatFuncJson {
                coeffs: None,
                num: Some(poly_to_strings(f.num())),
                den: Some(poly_to_strings(f.den())),
            }
        }
    }

    pub fn to_ratfunc(&self) -> Result<GRatFunc, JsonError> {
        match (&self.coeffs, &self.num) {
            (Some(cs), None) => Ok(RatFunc::from_poly(poly_from_strings(cs)?)),
            (None, Some(num)) => {
                let num = poly_from_strings(num)?;
                let den = match &self.den {
                    Some(d) => poly_from_strings(d)?,
                    None => GPoly::one(),
                };
                RatFunc::new(num, den).map_err(|e| structure(e.to_string()))
            }
            _ => Err(structure("rational function needs coeffs or num/den")),
        }
    }
}

// ---------------------------------------------------------------------------
// Spec documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceJson {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub den: Option<Vec<String>>,
    /// Optional product-equation polynomial at even nodes (pq checks).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_tilde: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecJson {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity_word: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cartan: Option<Vec<Vec<String>>>,
    pub twist: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sources: BTreeMap<u32, SourceJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<Vec<String>>>,
}

fn diagram_from_json(doc: &SpecJson) -> Result<Arc<DynkinDiagram>, JsonError> {
    let diagram = match doc.family.as_str() {
        "sl2" => DynkinDiagram::build(Family::Sl2)?,
        "gl11" => DynkinDiagram::build(Family::Gl11)?,
        "osp12" => DynkinDiagram::build(Family::Osp12)?,
        "slnm" => {
            if let Some(word) = &doc.parity_word {
                DynkinDiagram::slnm_from_word(word_from_string(word)?)?
            } else {
                let shape = doc
                    .shape
                    .as_ref()
                    .filter(|s| s.len() == 2)
                    .ok_or_else(|| structure("slnm needs shape [n, m] or parity_word"))?;
                DynkinDiagram::build(Family::Slnm {
                    n: shape[0],
                    m: shape[1],
                })?
            }
        }
        "osp" => {
            let shape = doc
                .shape
                .as_ref()
                .filter(|s| s.len() == 2)
                .ok_or_else(|| structure("osp needs shape [m, n]"))?;
            DynkinDiagram::build(Family::Osp {
                m: shape[0],
                n: shape[1],
            })?
        }
        "custom" => {
            let colors = doc
                .colors
                .as_ref()
                .ok_or_else(|| structure("custom diagram needs colors"))?
                .iter()
                .map(|c| {
                    c.chars()
                        .next()
                        .and_then(NodeColor::from_letter)
                        .ok_or_else(|| structure(format!("bad color {c}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let cartan = doc
                .cartan
                .as_ref()
                .ok_or_else(|| structure("custom diagram needs cartan"))?
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|s| {
                            Rat::from_str(s).map_err(|_| JsonError::Scalar(s.clone()))
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            DynkinDiagram::custom(colors, cartan)?
        }
        other => return Err(structure(format!("unknown family: {other}"))),
    };
    Ok(Arc::new(diagram))
}

impl SpecJson {
    pub fn to_spec(&self) -> Result<ExactSpec, JsonError> {
        let diagram = diagram_from_json(self)?;
        let zetas = self
            .twist
            .iter()
            .map(|s| scalar_from_string(s))
            .collect::<Result<Vec<_>, _>>()?;

        // family data wins: builders derive the sources
        if let Some(t) = &self.t {
            let t = t
                .iter()
                .map(|cs| poly_from_strings(cs))
                .collect::<Result<Vec<_>, _>>()?;
            let spec = crate::qqsystem::build_slnm_spec(t, diagram)?;
            return Ok(spec.with_zetas(zetas)?);
        }
        if let Some(lambda) = &self.lambda {
            let lambda = lambda
                .iter()
                .map(|cs| poly_from_strings(cs))
                .collect::<Result<Vec<_>, _>>()?;
            let spec = crate::qqsystem::build_osp_spec(lambda, diagram)?;
            return Ok(spec.with_zetas(zetas)?);
        }

        let mut sources = Vec::with_capacity(diagram.rank());
        for node in diagram.nodes() {
            let entry = self
                .sources
                .get(&(node as u32))
                .ok_or_else(|| structure(format!("missing source for node {node}")))?;
            let grey = diagram.color(node)? == NodeColor::Grey;
            let source = match (entry.kind.as_str(), grey) {
                ("L", false) => {
                    let f = RatFuncJson {
                        coeffs: entry.coeffs.clone(),
                        num: entry.num.clone(),
                        den: entry.den.clone(),
                    }
                    .to_ratfunc()?;
                    let lambda_tilde = entry
                        .lambda_tilde
                        .as_ref()
                        .map(|cs| poly_from_strings(cs))
                        .transpose()?;
                    NodeSource::Even { l: f, lambda_tilde }
                }
                // a grey L is accepted by the schema and carries no equation
                ("L", true) | ("deferred", true) => NodeSource::Grey(GreySource::DeferredSlnm),
                ("lambda_tilde", true) => {
                    let cs = entry
                        .coeffs
                        .as_ref()
                        .ok_or_else(|| structure("lambda_tilde source needs coeffs"))?;
                    NodeSource::Grey(GreySource::Explicit(poly_from_strings(cs)?))
                }
                (kind, _) => {
                    return Err(structure(format!(
                        "source kind {kind} does not fit node {node}"
                    )))
                }
            };
            sources.push(source);
        }
        Ok(QqSpec::new(diagram, zetas, sources)?)
    }

    pub fn from_spec(spec: &ExactSpec) -> Self {
        let diagram = spec.diagram();
        let family = diagram.family().key().to_string();
        let shape = match diagram.family() {
            Family::Slnm { n, m } => Some(vec![*n, *m]),
            Family::Osp { m, n } => Some(vec![*m, *n]),
            _ => None,
        };
        let mut sources = BTreeMap::new();
        for node in diagram.nodes() {
            let entry = match spec.source(node) {
                NodeSource::Even { l, lambda_tilde } => {
                    let f = RatFuncJson::from_ratfunc(l);
                    SourceJson {
                        kind: "L".to_string(),
                        coeffs: f.coeffs,
                        num: f.num,
                        den: f.den,
                        lambda_tilde: lambda_tilde.as_ref().map(poly_to_strings),
                    }
                }
                NodeSource::Grey(GreySource::Explicit(p)) => SourceJson {
                    kind: "lambda_tilde".to_string(),
                    coeffs: Some(poly_to_strings(p)),
                    num: None,
                    den: None,
                    lambda_tilde: None,
                },
                NodeSource::Grey(_) => SourceJson {
                    kind: "deferred".to_string(),
                    coeffs: None,
                    num: None,
                    den: None,
                    lambda_tilde: None,
                },
            };
            sources.insert(node as u32, entry);
        }
        SpecJson {
            family,
            shape,
            parity_word: diagram.parity_word().map(word_to_string),
            colors: Some(
                diagram
                    .colors()
                    .iter()
                    .map(|c| c.letter().to_string())
                    .collect(),
            ),
            cartan: Some(
                diagram
                    .cartan_rows()
                    .iter()
                    .map(|row| row.iter().map(Rat::to_string).collect())
                    .collect(),
            ),
            twist: spec.zetas().iter().map(scalar_to_string).collect(),
            sources,
            t: spec
                .t_data()
                .map(|ts| ts.iter().map(poly_to_strings).collect()),
            lambda: spec
                .osp_lambda()
                .map(|ls| ls.iter().map(poly_to_strings).collect()),
        }
    }
}

// ---------------------------------------------------------------------------
// Solution documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionNodeJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_plus: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_minus: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_plus: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_minus: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<RatFuncJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionJson {
    pub nodes: Vec<SolutionNodeJson>,
}

impl SolutionJson {
    pub fn to_qq_solution(&self) -> Result<ExactSolution, JsonError> {
        let pairs = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let qp = n
                    .q_plus
                    .as_ref()
                    .ok_or_else(|| structure(format!("node {} needs q_plus", i + 1)))?;
                let qm = n
                    .q_minus
                    .as_ref()
                    .ok_or_else(|| structure(format!("node {} needs q_minus", i + 1)))?;
                QqPair::new(poly_from_strings(qp)?, poly_from_strings(qm)?)
                    .map_err(|e| structure(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QqSolution::new(pairs))
    }

    pub fn to_pq_solution(&self) -> Result<PqSolution<Gauss>, JsonError> {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let pp = n
                    .p_plus
                    .as_ref()
                    .ok_or_else(|| structure(format!("node {} needs p_plus", i + 1)))?;
                let pm = n
                    .p_minus
                    .as_ref()
                    .ok_or_else(|| structure(format!("node {} needs p_minus", i + 1)))?;
                let q = match (&n.q_plus, &n.q_minus) {
                    (Some(qp), Some(qm)) => Some(
                        QqPair::new(poly_from_strings(qp)?, poly_from_strings(qm)?)
                            .map_err(|e| structure(e.to_string()))?,
                    ),
                    _ => None,
                };
                PqNode::new(poly_from_strings(pp)?, poly_from_strings(pm)?, q)
                    .map_err(|e| structure(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PqSolution::new(nodes))
    }

    pub fn from_qq_solution(sol: &ExactSolution) -> Self {
        SolutionJson {
            nodes: sol
                .nodes()
                .iter()
                .map(|p| SolutionNodeJson {
                    q_plus: Some(poly_to_strings(p.q_plus())),
                    q_minus: Some(poly_to_strings(p.q_minus())),
                    p_plus: None,
                    p_minus: None,
                    u: None,
                })
                .collect(),
        }
    }

    /// The per-node p data (and optional u) for the block checks.
    pub fn to_mp_data(&self) -> Result<Vec<crate::operconn::MpNode<Gauss>>, JsonError> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let pp = n
                    .p_plus
                    .as_ref()
                    .ok_or_else(|| structure(format!("node {} needs p_plus", i + 1)))?;
                let pm = n
                    .p_minus
                    .as_ref()
                    .ok_or_else(|| structure(format!("node {} needs p_minus", i + 1)))?;
                Ok(crate::operconn::MpNode {
                    p_plus: poly_from_strings(pp)?,
                    p_minus: poly_from_strings(pm)?,
                    u: n.u.as_ref().map(|f| f.to_ratfunc()).transpose()?,
                })
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Bethe roots and solver config
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootsJson {
    pub nodes: Vec<Vec<ComplexJson>>,
}

impl RootsJson {
    pub fn from_roots(roots: &crate::bethe::BetheRoots<Complex64>) -> Self {
        RootsJson {
            nodes: roots
                .nodes
                .iter()
                .map(|ws| ws.iter().map(|w| ComplexJson { re: w.re, im: w.im }).collect())
                .collect(),
        }
    }

    pub fn to_roots(&self) -> crate::bethe::BetheRoots<Complex64> {
        crate::bethe::BetheRoots::new(
            self.nodes
                .iter()
                .map(|ws| ws.iter().map(|w| Complex64::new(w.re, w.im)).collect())
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Factor chains and connections
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainFactorJson {
    pub a: RatFuncJson,
    pub s: i8,
}

pub fn chain_to_json(chain: &crate::psdo::FactorChain<Gauss>) -> Vec<ChainFactorJson> {
    chain
        .factors()
        .iter()
        .map(|(a, s)| ChainFactorJson {
            a: RatFuncJson::from_ratfunc(a),
            s: *s,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionJson {
    pub dim: usize,
    pub rep: String,
    pub matrix: Vec<Vec<RatFuncJson>>,
}

pub fn connection_to_json(conn: &crate::operconn::Connection<Gauss>) -> ConnectionJson {
    let d = conn.dim();
    ConnectionJson {
        dim: d,
        rep: conn.rep.clone(),
        matrix: (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| RatFuncJson::from_ratfunc(conn.matrix.at(i, j)))
                    .collect()
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Run reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportJson {
    pub command: String,
    /// `pass` | `fail` | `error`.
    pub status: String,
    pub diagnostics: Vec<DiagnosticJson>,
    pub timing_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<serde_json::Value>,
}

/// Canonical serialization: pretty JSON plus a trailing newline.
pub fn to_canonical_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn parse_spec(text: &str) -> Result<ExactSpec, JsonError> {
    let doc: SpecJson = serde_json::from_str(text)?;
    doc.to_spec()
}

pub fn parse_solution_doc(text: &str) -> Result<SolutionJson, JsonError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_roots(text: &str) -> Result<RootsJson, JsonError> {
    Ok(serde_json::from_str(text)?)
}
