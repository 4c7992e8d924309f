//! Dynkin-diagram data for simple Lie superalgebras: node coloring, super
//! Cartan matrices, even Weyl reflections on twists, odd reflections on
//! parity words.
//!
//! Conventions fixed here (and pinned by the bundled family table):
//! - the invariant form takes even basis directions to `+1` and odd ones to
//!   `-1`;
//! - rows of the Cartan matrix at nodes with nonzero self-pairing are
//!   normalized to `a_ii = 2`; grey rows (isotropic nodes) keep the raw
//!   pairings, so `a_ii = 0`;
//! - `cartan[j][i]` is `a_ji`, the pairing of coroot `j` against root `i`;
//! - a black coroot enters the twist expansion with the extra factor `1/2`.
//!
//! Nodes are indexed `1..=rank` in every public signature.

use crate::scalar::Gauss;
use crate::Rat;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeColor {
    /// Even simple root.
    White,
    /// Isotropic odd simple root.
    Grey,
    /// Non-isotropic odd simple root.
    Black,
}

impl NodeColor {
    pub fn letter(self) -> char {
        match self {
            NodeColor::White => 'w',
            NodeColor::Grey => 'g',
            NodeColor::Black => 'b',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'w' => Some(NodeColor::White),
            'g' => Some(NodeColor::Grey),
            'b' => Some(NodeColor::Black),
            _ => None,
        }
    }
}

/// Basis-vector parity of the permutation model for sl(n|m) diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> i64 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Parity::Even => '+',
            Parity::Odd => '-',
        }
    }
}

/// Parity word as a display string, `+` even and `-` odd.
pub fn word_to_string(word: &[Parity]) -> String {
    word.iter().map(|p| p.symbol()).collect()
}

pub fn word_from_string(s: &str) -> Result<Vec<Parity>, RootError> {
    s.chars()
        .map(|c| match c {
            '+' => Ok(Parity::Even),
            '-' => Ok(Parity::Odd),
            _ => Err(RootError::BadParityWord(s.to_string())),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Family {
    Sl2,
    Gl11,
    Osp12,
    Slnm { n: usize, m: usize },
    Osp { m: usize, n: usize },
    Custom,
}

impl Family {
    /// Key used in the family table and the JSON schema.
    pub fn key(&self) -> &'static str {
        match self {
            Family::Sl2 => "sl2",
            Family::Gl11 => "gl11",
            Family::Osp12 => "osp12",
            Family::Slnm { .. } => "slnm",
            Family::Osp { .. } => "osp",
            Family::Custom => "custom",
        }
    }

    pub fn shape_string(&self) -> String {
        match self {
            Family::Slnm { n, m } => format!("{n}|{m}"),
            Family::Osp { m, n } => format!("{m}|{n}"),
            _ => "-".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RootError {
    UnknownFamily(String),
    InvalidShape(String),
    NodeOutOfRange { node: usize, rank: usize },
    NodeNotGrey(usize),
    NodeIsGrey(usize),
    UnsupportedFamily(&'static str),
    BadParityWord(String),
    TwistLength { expected: usize, got: usize },
    FamilyTableMismatch(String),
    BadTable(String),
}

impl fmt::Display for RootError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootError::UnknownFamily(s) => write!(f, "unknown family: {s}"),
            RootError::InvalidShape(s) => write!(f, "invalid shape: {s}"),
            RootError::NodeOutOfRange { node, rank } => {
                write!(f, "node {node} out of range for rank {rank}")
            }
            RootError::NodeNotGrey(n) => write!(f, "node {n} is not grey"),
            RootError::NodeIsGrey(n) => write!(f, "node {n} is grey"),
            RootError::UnsupportedFamily(what) => write!(f, "unsupported family for {what}"),
            RootError::BadParityWord(s) => write!(f, "malformed parity word: {s}"),
            RootError::TwistLength { expected, got } => {
                write!(f, "twist length {got}, diagram rank {expected}")
            }
            RootError::FamilyTableMismatch(s) => {
                write!(f, "generated diagram disagrees with the family table: {s}")
            }
            RootError::BadTable(s) => write!(f, "malformed family table: {s}"),
        }
    }
}

impl std::error::Error for RootError {}

#[derive(Debug, Clone, PartialEq)]
pub struct DynkinDiagram {
    rank: usize,
    colors: Vec<NodeColor>,
    cartan: Vec<Vec<Rat>>,
    family: Family,
    word: Option<Vec<Parity>>,
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Gram matrix of root vectors under a diagonal form with the given signs.
fn gram(roots: &[Vec<i64>], norms: &[i64]) -> Vec<Vec<i64>> {
    let r = roots.len();
    let mut b = vec![vec![0i64; r]; r];
    for i in 0..r {
        for j in 0..r {
            b[i][j] = roots[i]
                .iter()
                .zip(&roots[j])
                .zip(norms)
                .map(|((x, y), s)| x * y * s)
                .sum();
        }
    }
    b
}

/// Colors and Cartan rows from the Gram matrix and per-root parities.
fn classify(b: &[Vec<i64>], odd: &[bool]) -> Result<(Vec<NodeColor>, Vec<Vec<Rat>>), RootError> {
    let r = b.len();
    let mut colors = Vec::with_capacity(r);
    let mut cartan = vec![vec![Rat::zero(); r]; r];
    for i in 0..r {
        let self_pairing = b[i][i];
        let color = match (odd[i], self_pairing) {
            (false, 0) => {
                return Err(RootError::InvalidShape(
                    "even root with vanishing self-pairing".into(),
                ))
            }
            (false, _) => NodeColor::White,
            (true, 0) => NodeColor::Grey,
            (true, _) => NodeColor::Black,
        };
        colors.push(color);
        for j in 0..r {
            cartan[i][j] = if self_pairing == 0 {
                rat(b[i][j])
            } else {
                Rat::new(BigInt::from(2 * b[i][j]), BigInt::from(self_pairing))
            };
        }
    }
    Ok((colors, cartan))
}

fn slnm_data(word: &[Parity]) -> Result<(Vec<NodeColor>, Vec<Vec<Rat>>), RootError> {
    let len = word.len();
    if len < 2 {
        return Err(RootError::InvalidShape("parity word shorter than 2".into()));
    }
    let rank = len - 1;
    let norms: Vec<i64> = word.iter().map(|p| p.sign()).collect();
    let mut roots = Vec::with_capacity(rank);
    let mut odd = Vec::with_capacity(rank);
    for i in 0..rank {
        let mut v = vec![0i64; len];
        v[i] = 1;
        v[i + 1] = -1;
        roots.push(v);
        odd.push(word[i] != word[i + 1]);
    }
    classify(&gram(&roots, &norms), &odd)
}

fn osp_data(m: usize, n: usize) -> Result<(Vec<NodeColor>, Vec<Vec<Rat>>), RootError> {
    if m == 0 || n == 0 {
        return Err(RootError::InvalidShape(format!("osp({m}|{})", 2 * n)));
    }
    let k = m / 2;
    // basis: delta_1..delta_n (odd, norm -1), eps_1..eps_k (even, norm +1)
    let dim = n + k;
    let norms: Vec<i64> = (0..dim).map(|i| if i < n { -1 } else { 1 }).collect();
    let delta = |i: usize| {
        let mut v = vec![0i64; dim];
        v[i] = 1;
        v
    };
    let eps = |j: usize| {
        let mut v = vec![0i64; dim];
        v[n + j] = 1;
        v
    };
    let sub = |a: &[i64], b: &[i64]| -> Vec<i64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let add = |a: &[i64], b: &[i64]| -> Vec<i64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };

    let mut roots: Vec<Vec<i64>> = Vec::new();
    let mut odd: Vec<bool> = Vec::new();
    let is_odd = |v: &[i64]| v[..n].iter().map(|c| c.abs()).sum::<i64>() % 2 == 1;

    if m == 2 {
        // C-type: grey node first, then the sp(2n) tail
        roots.push(sub(&eps(0), &delta(0)));
        for i in 0..n - 1 {
            roots.push(sub(&delta(i), &delta(i + 1)));
        }
        roots.push(delta(n - 1).iter().map(|c| 2 * c).collect());
    } else {
        for i in 0..n - 1 {
            roots.push(sub(&delta(i), &delta(i + 1)));
        }
        if m == 1 {
            roots.push(delta(n - 1));
        } else {
            roots.push(sub(&delta(n - 1), &eps(0)));
            for j in 0..k - 1 {
                roots.push(sub(&eps(j), &eps(j + 1)));
            }
            if m % 2 == 1 {
                roots.push(eps(k - 1));
            } else {
                roots.push(add(&eps(k - 2), &eps(k - 1)));
            }
        }
    }
    for v in &roots {
        odd.push(is_odd(v));
    }
    classify(&gram(&roots, &norms), &odd)
}

impl DynkinDiagram {
    /// Diagram for a named family. Shapes live inside the [`Family`] value.
    pub fn build(family: Family) -> Result<Self, RootError> {
        let diagram = match &family {
            Family::Sl2 => Self::from_word_tagged(vec![Parity::Even, Parity::Even], family.clone())?,
            Family::Gl11 => Self::from_word_tagged(vec![Parity::Even, Parity::Odd], family.clone())?,
            Family::Osp12 => {
                let (colors, cartan) = osp_data(1, 1)?;
                DynkinDiagram {
                    rank: 1,
                    colors,
                    cartan,
                    family,
                    word: None,
                }
            }
            Family::Slnm { n, m } => {
                if n + m < 2 {
                    return Err(RootError::InvalidShape(format!("sl({n}|{m})")));
                }
                let mut word = vec![Parity::Even; *n];
                word.extend(std::iter::repeat_n(Parity::Odd, *m));
                Self::from_word_tagged(word, family.clone())?
            }
            Family::Osp { m, n } => {
                let (colors, cartan) = osp_data(*m, *n)?;
                DynkinDiagram {
                    rank: colors.len(),
                    colors,
                    cartan,
                    family,
                    word: None,
                }
            }
            Family::Custom => return Err(RootError::UnknownFamily("custom".into())),
        };
        diagram.check_against_table()?;
        Ok(diagram)
    }

    /// sl(n|m)-model diagram for an arbitrary parity word.
    pub fn slnm_from_word(word: Vec<Parity>) -> Result<Self, RootError> {
        let n = word.iter().filter(|p| **p == Parity::Even).count();
        let m = word.len() - n;
        let d = Self::from_word_tagged(word, Family::Slnm { n, m })?;
        d.check_against_table()?;
        Ok(d)
    }

    fn from_word_tagged(word: Vec<Parity>, family: Family) -> Result<Self, RootError> {
        let (colors, cartan) = slnm_data(&word)?;
        Ok(DynkinDiagram {
            rank: colors.len(),
            colors,
            cartan,
            family,
            word: Some(word),
        })
    }

    /// Diagram from explicit colors and Cartan data.
    pub fn custom(colors: Vec<NodeColor>, cartan: Vec<Vec<Rat>>) -> Result<Self, RootError> {
        let rank = colors.len();
        if cartan.len() != rank || cartan.iter().any(|row| row.len() != rank) {
            return Err(RootError::InvalidShape("cartan shape".into()));
        }
        for (i, color) in colors.iter().enumerate() {
            let expect = match color {
                NodeColor::Grey => Rat::zero(),
                _ => rat(2),
            };
            if cartan[i][i] != expect {
                return Err(RootError::InvalidShape(format!(
                    "diagonal entry at node {} must be {expect} for color {}",
                    i + 1,
                    color.letter()
                )));
            }
        }
        Ok(DynkinDiagram {
            rank,
            colors,
            cartan,
            family: Family::Custom,
            word: None,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn colors(&self) -> &[NodeColor] {
        &self.colors
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn parity_word(&self) -> Option<&[Parity]> {
        self.word.as_deref()
    }

    pub fn color(&self, node: usize) -> Result<NodeColor, RootError> {
        Ok(self.colors[self.idx(node)?])
    }

    /// `a_ji`, both indices 1-based.
    pub fn cartan(&self, j: usize, i: usize) -> Result<&Rat, RootError> {
        let (j, i) = (self.idx(j)?, self.idx(i)?);
        Ok(&self.cartan[j][i])
    }

    pub fn cartan_rows(&self) -> &[Vec<Rat>] {
        &self.cartan
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> {
        1..=self.rank
    }

    pub fn grey_nodes(&self) -> Vec<usize> {
        self.nodes()
            .filter(|&i| self.colors[i - 1] == NodeColor::Grey)
            .collect()
    }

    fn idx(&self, node: usize) -> Result<usize, RootError> {
        if node == 0 || node > self.rank {
            return Err(RootError::NodeOutOfRange {
                node,
                rank: self.rank,
            });
        }
        Ok(node - 1)
    }

    /// Odd reflection at a grey node. Diagram mutation only; realized through
    /// the parity-word model, so it is available exactly for the sl(n|m)-type
    /// families (including gl(1|1)).
    pub fn odd_reflection(&self, node: usize) -> Result<DynkinDiagram, RootError> {
        let i = self.idx(node)?;
        if self.colors[i] != NodeColor::Grey {
            return Err(RootError::NodeNotGrey(node));
        }
        let Some(word) = &self.word else {
            return Err(RootError::UnsupportedFamily("odd reflection"));
        };
        let mut new_word = word.clone();
        new_word.swap(i, i + 1);
        Self::from_word_tagged(new_word, self.family.clone())
    }

    fn check_against_table(&self) -> Result<(), RootError> {
        let word_key = match &self.word {
            Some(w) => word_to_string(w),
            None => "distinguished".to_string(),
        };
        if let Some(entry) = family_table().iter().find(|e| {
            e.family == self.family.key()
                && e.shape == self.family.shape_string()
                && e.word == word_key
        }) {
            if entry.colors != self.colors || entry.cartan != self.cartan {
                return Err(RootError::FamilyTableMismatch(format!(
                    "{} {} {}",
                    entry.family, entry.shape, entry.word
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Twist element Z
// ---------------------------------------------------------------------------

/// Constant Cartan element `Z = sum_{w,g} zeta_i ac_i + sum_b zeta_i ac_i/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistZ {
    zetas: Vec<Gauss>,
    diagram: Arc<DynkinDiagram>,
}

impl TwistZ {
    pub fn new(diagram: Arc<DynkinDiagram>, zetas: Vec<Gauss>) -> Result<Self, RootError> {
        if zetas.len() != diagram.rank() {
            return Err(RootError::TwistLength {
                expected: diagram.rank(),
                got: zetas.len(),
            });
        }
        Ok(TwistZ { zetas, diagram })
    }

    pub fn zero(diagram: Arc<DynkinDiagram>) -> Self {
        let zetas = vec![Gauss::zero(); diagram.rank()];
        TwistZ { zetas, diagram }
    }

    pub fn zetas(&self) -> &[Gauss] {
        &self.zetas
    }

    pub fn zeta(&self, node: usize) -> Result<&Gauss, RootError> {
        let i = self.diagram.idx(node)?;
        Ok(&self.zetas[i])
    }

    pub fn diagram(&self) -> &Arc<DynkinDiagram> {
        &self.diagram
    }

    /// `<alpha_node, Z>`: coefficient-weighted Cartan column, the black
    /// coroots carrying the extra `1/2`.
    pub fn pairing(&self, node: usize) -> Result<Gauss, RootError> {
        self.diagram.idx(node)?;
        let mut acc = Gauss::zero();
        for j in self.diagram.nodes() {
            let a_ji = self.diagram.cartan(j, node)?.clone();
            let weight = match self.diagram.color(j)? {
                NodeColor::Black => a_ji / rat(2),
                _ => a_ji,
            };
            acc = acc + self.zetas[j - 1].clone() * Gauss::from_rational(weight);
        }
        Ok(acc)
    }

    /// Whether `<alpha_i, Z>` is nonzero at every node.
    pub fn is_regular(&self) -> bool {
        self.diagram
            .nodes()
            .all(|i| !self.pairing(i).unwrap().is_zero())
    }

    /// Even Weyl reflection `Z -> w_i(Z)` at a white or black node.
    pub fn weyl_twist(&self, node: usize) -> Result<TwistZ, RootError> {
        let i = self.diagram.idx(node)?;
        let color = self.diagram.color(node)?;
        if color == NodeColor::Grey {
            return Err(RootError::NodeIsGrey(node));
        }
        let pairing = self.pairing(node)?;
        // ac_i = c_i for white, 2 c_i for black, in the stored basis
        let factor = match color {
            NodeColor::Black => Gauss::int(2),
            _ => Gauss::one(),
        };
        let mut zetas = self.zetas.clone();
        zetas[i] = zetas[i].clone() - factor * pairing;
        Ok(TwistZ {
            zetas,
            diagram: self.diagram.clone(),
        })
    }
}

// ---------------------------------------------------------------------------
// Bundled family table
// ---------------------------------------------------------------------------

/// One golden entry of the bundled family table.
#[derive(Debug, Clone)]
pub struct TableEntry {
    pub family: String,
    pub shape: String,
    pub word: String,
    pub colors: Vec<NodeColor>,
    pub cartan: Vec<Vec<Rat>>,
}

const FAMILY_TABLE_TEXT: &str = include_str!("../data/families.tbl");

fn parse_table(text: &str) -> Result<Vec<TableEntry>, RootError> {
    let mut entries = Vec::new();
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .peekable();

    match lines.next() {
        Some(l) if l.starts_with("version") => {}
        other => {
            return Err(RootError::BadTable(format!(
                "expected version line, found {other:?}"
            )))
        }
    }

    while let Some(line) = lines.next() {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("entry") {
            return Err(RootError::BadTable(format!("expected entry line: {line}")));
        }
        let family = parts.next().ok_or_else(|| RootError::BadTable(line.into()))?;
        let shape = parts.next().ok_or_else(|| RootError::BadTable(line.into()))?;
        let word = parts.next().ok_or_else(|| RootError::BadTable(line.into()))?;

        let colors_line = lines
            .next()
            .ok_or_else(|| RootError::BadTable("missing colors".into()))?;
        let colors = colors_line
            .strip_prefix("colors")
            .ok_or_else(|| RootError::BadTable(colors_line.into()))?
            .split_whitespace()
            .map(|tok| {
                tok.chars()
                    .next()
                    .and_then(NodeColor::from_letter)
                    .ok_or_else(|| RootError::BadTable(format!("bad color {tok}")))
            })
            .collect::<Result<Vec<_>, _>>()?;

        if lines.next() != Some("cartan") {
            return Err(RootError::BadTable("missing cartan block".into()));
        }
        let mut cartan = Vec::new();
        loop {
            let row_line = lines
                .next()
                .ok_or_else(|| RootError::BadTable("unterminated cartan block".into()))?;
            if row_line == "end" {
                break;
            }
            let row = row_line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<Rat>()
                        .map_err(|_| RootError::BadTable(format!("bad rational {tok}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            cartan.push(row);
        }
        if cartan.len() != colors.len() || cartan.iter().any(|r| r.len() != colors.len()) {
            return Err(RootError::BadTable(format!(
                "entry {family} {shape} {word} has inconsistent rank"
            )));
        }
        entries.push(TableEntry {
            family: family.to_string(),
            shape: shape.to_string(),
            word: word.to_string(),
            colors,
            cartan,
        });
    }
    Ok(entries)
}

/// The parsed bundled table.
pub fn family_table() -> &'static [TableEntry] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<TableEntry>> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(FAMILY_TABLE_TEXT).expect("bundled family table parses"))
}
