//! Arithmetic expression trees over the eight mix features.
//!
//! Random generation only ever produces the four binary operators and
//! variable leaves. Constant leaves and the logistic wrapper exist so that an
//! individual evolved on semantics can be expanded back into a literal tree.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dataset::{Dataset, N_FEATURES};

/// Denominators with magnitude below this make division return
/// [`PROTECTED_DIV_FALLBACK`].
pub const PROTECTED_DIV_EPS: f64 = 1e-6;
pub const PROTECTED_DIV_FALLBACK: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub const ALL: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/p",
        }
    }

    /// Total arithmetic: division is protected and overflow saturates at
    /// `±f64::MAX`, so finite operands always give a finite result.
    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let v = match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => {
                if b.abs() < PROTECTED_DIV_EPS {
                    return PROTECTED_DIV_FALLBACK;
                }
                a / b
            }
        };
        saturate(v)
    }
}

#[inline]
fn saturate(v: f64) -> f64 {
    v.clamp(f64::MIN, f64::MAX)
}

/// Logistic squashing `1 / (1 + e^-v)`, mapping the reals into `[0, 1]`.
#[inline]
pub fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprTree {
    /// Zero-based feature index; printed as `x1`..`x8`.
    Var(usize),
    Const(f64),
    Binary(BinOp, Box<ExprTree>, Box<ExprTree>),
    Logistic(Box<ExprTree>),
}

// add/sub/mul/div build nodes from two owned subtrees; they are not operator impls
#[allow(clippy::should_implement_trait)]
impl ExprTree {
    pub fn var(feature: usize) -> Self {
        assert!(feature < N_FEATURES, "feature index {feature} out of range");
        ExprTree::Var(feature)
    }

    pub fn binary(op: BinOp, lhs: ExprTree, rhs: ExprTree) -> Self {
        ExprTree::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn add(lhs: ExprTree, rhs: ExprTree) -> Self {
        Self::binary(BinOp::Add, lhs, rhs)
    }
    pub fn sub(lhs: ExprTree, rhs: ExprTree) -> Self {
        Self::binary(BinOp::Sub, lhs, rhs)
    }
    pub fn mul(lhs: ExprTree, rhs: ExprTree) -> Self {
        Self::binary(BinOp::Mul, lhs, rhs)
    }
    pub fn div(lhs: ExprTree, rhs: ExprTree) -> Self {
        Self::binary(BinOp::Div, lhs, rhs)
    }
    pub fn logistic(inner: ExprTree) -> Self {
        ExprTree::Logistic(Box::new(inner))
    }

    /// Evaluates the tree on one feature vector. Never fails and never
    /// returns a non-finite value for finite inputs.
    pub fn eval(&self, x: &[f64; N_FEATURES]) -> f64 {
        match self {
            ExprTree::Var(i) => x[*i],
            ExprTree::Const(c) => *c,
            ExprTree::Binary(op, a, b) => op.apply(a.eval(x), b.eval(x)),
            ExprTree::Logistic(a) => logistic(a.eval(x)),
        }
    }

    /// Output of the tree on every sample of `ds`, in row order.
    pub fn eval_dataset(&self, ds: &Dataset) -> Vec<f64> {
        ds.samples()
            .iter()
            .map(|s| self.eval(&s.features))
            .collect()
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            ExprTree::Var(_) | ExprTree::Const(_) => 1,
            ExprTree::Binary(_, a, b) => 1 + a.size() + b.size(),
            ExprTree::Logistic(a) => 1 + a.size(),
        }
    }

    /// Longest root-to-leaf path, counted in nodes (a leaf has depth 1).
    pub fn depth(&self) -> usize {
        match self {
            ExprTree::Var(_) | ExprTree::Const(_) => 1,
            ExprTree::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
            ExprTree::Logistic(a) => 1 + a.depth(),
        }
    }

    /// True if the tree uses only the primitives random generation draws
    /// from: the four operators and in-range variables.
    pub fn is_primitive(&self) -> bool {
        match self {
            ExprTree::Var(i) => *i < N_FEATURES,
            ExprTree::Const(_) | ExprTree::Logistic(_) => false,
            ExprTree::Binary(_, a, b) => a.is_primitive() && b.is_primitive(),
        }
    }

    /// Subtree at preorder position `index` (the root is 0).
    pub fn subtree(&self, index: usize) -> Option<&ExprTree> {
        let mut remaining = index;
        self.find(&mut remaining)
    }

    fn find(&self, remaining: &mut usize) -> Option<&ExprTree> {
        if *remaining == 0 {
            return Some(self);
        }
        *remaining -= 1;
        match self {
            ExprTree::Var(_) | ExprTree::Const(_) => None,
            ExprTree::Binary(_, a, b) => a.find(remaining).or_else(|| b.find(remaining)),
            ExprTree::Logistic(a) => a.find(remaining),
        }
    }

    /// Copy of the tree with the subtree at preorder position `index`
    /// replaced by `replacement`. Out-of-range positions leave it unchanged.
    pub fn with_subtree(&self, index: usize, replacement: &ExprTree) -> ExprTree {
        let mut remaining = index;
        self.replace(&mut remaining, replacement)
    }

    fn replace(&self, remaining: &mut usize, replacement: &ExprTree) -> ExprTree {
        if *remaining == 0 {
            *remaining = usize::MAX;
            return replacement.clone();
        }
        if *remaining != usize::MAX {
            *remaining -= 1;
        }
        match self {
            ExprTree::Var(_) | ExprTree::Const(_) => self.clone(),
            ExprTree::Binary(op, a, b) => {
                let a = a.replace(remaining, replacement);
                let b = b.replace(remaining, replacement);
                ExprTree::binary(*op, a, b)
            }
            ExprTree::Logistic(a) => ExprTree::logistic(a.replace(remaining, replacement)),
        }
    }

    /// Fully parenthesised infix text; see [`parse`] for the grammar.
    pub fn to_infix(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprTree::Var(i) => write!(f, "x{}", i + 1),
            // Debug formatting is the shortest text that parses back exactly.
            ExprTree::Const(c) => write!(f, "{c:?}"),
            ExprTree::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ExprTree::Logistic(a) => write!(f, "sig({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expression parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

/// Parses the textual tree format:
///
/// ```text
/// expr := "x" 1..8 | number | "sig(" expr ")" | "(" expr op expr ")"
/// op   := "+" | "-" | "*" | "/p"
/// ```
pub fn parse(text: &str) -> Result<ExprTree, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let tree = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(tree)
}

impl FromStr for ExprTree {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Serialize for ExprTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_infix())
    }
}

impl<'de> Deserialize<'de> for ExprTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ParseError {
        ParseError {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        self.skip_ws();
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{token}`")))
        }
    }

    fn expr(&mut self) -> Result<ExprTree, ParseError> {
        self.skip_ws();
        if self.eat("(") {
            let lhs = self.expr()?;
            self.skip_ws();
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else if self.eat("*") {
                BinOp::Mul
            } else if self.eat("/p") {
                BinOp::Div
            } else {
                return Err(self.error("expected one of `+`, `-`, `*`, `/p`"));
            };
            let rhs = self.expr()?;
            self.expect(")")?;
            return Ok(ExprTree::binary(op, lhs, rhs));
        }
        if self.eat("sig(") {
            let inner = self.expr()?;
            self.expect(")")?;
            return Ok(ExprTree::logistic(inner));
        }
        if self.eat("x") {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            return match digits.parse::<usize>() {
                Ok(i) if (1..=N_FEATURES).contains(&i) => Ok(ExprTree::Var(i - 1)),
                _ => {
                    self.pos = start;
                    Err(self.error("variable index must be 1..8"))
                }
            };
        }
        let start = self.pos;
        while self.pos < self.src.len()
            && matches!(
                self.src[self.pos],
                b'0'..=b'9' | b'.' | b'e' | b'E' | b'+' | b'-'
            )
        {
            // a sign is only part of the number at its start or after an exponent marker
            let c = self.src[self.pos];
            if (c == b'+' || c == b'-')
                && self.pos != start
                && !matches!(self.src[self.pos - 1], b'e' | b'E')
            {
                break;
            }
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(ExprTree::Const(v)),
            _ => {
                self.pos = start;
                Err(self.error("expected an expression"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Full,
    Grow,
}

/// Random tree shape: `full` puts every leaf at `max_depth`; `grow` stops
/// each branch early at random.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenMethod {
    pub method: Method,
    pub max_depth: usize,
}

impl GenMethod {
    pub fn full(max_depth: usize) -> Self {
        GenMethod {
            method: Method::Full,
            max_depth,
        }
    }
    pub fn grow(max_depth: usize) -> Self {
        GenMethod {
            method: Method::Grow,
            max_depth,
        }
    }
}

/// Draws a random tree. Operators are uniform over the four symbols and
/// variables uniform over x1..x8. Under `grow`, every node above the depth
/// limit is drawn uniformly from the twelve primitives.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, gen: GenMethod) -> ExprTree {
    assert!(gen.max_depth >= 1, "max_depth must be at least 1");
    grow_node(rng, gen.method, gen.max_depth)
}

fn grow_node<R: Rng + ?Sized>(rng: &mut R, method: Method, depth: usize) -> ExprTree {
    let leaf = depth == 1
        || (method == Method::Grow
            && rng.gen_range(0..BinOp::ALL.len() + N_FEATURES) >= BinOp::ALL.len());
    if leaf {
        return ExprTree::Var(rng.gen_range(0..N_FEATURES));
    }
    let op = BinOp::ALL[rng.gen_range(0..BinOp::ALL.len())];
    let lhs = grow_node(rng, method, depth - 1);
    let rhs = grow_node(rng, method, depth - 1);
    ExprTree::binary(op, lhs, rhs)
}

/// Ramped half-and-half: tree `i` gets depth `min_depth + i % span`, and
/// alternating blocks of `span` trees use `full` then `grow`, so each depth
/// receives both methods in equal measure.
pub fn ramped_half_and_half<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    min_depth: usize,
    max_depth: usize,
) -> Vec<ExprTree> {
    assert!(1 <= min_depth && min_depth <= max_depth);
    let span = max_depth - min_depth + 1;
    (0..count)
        .map(|i| {
            let depth = min_depth + i % span;
            let gen = if (i / span).is_multiple_of(2) {
                GenMethod::full(depth)
            } else {
                GenMethod::grow(depth)
            };
            random_tree(rng, gen)
        })
        .collect()
}
