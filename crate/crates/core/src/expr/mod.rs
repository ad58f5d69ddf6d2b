//! Scalar expressions over the coordinates of a chart.
//!
//! Expressions are immutable trees shared through [`Arc`]. A [`ScalarField`]
//! pairs a tree with its [`Chart`] and memoizes mixed partial derivatives, so
//! repeated requests for `∂²f/∂x∂y` across a sampling sweep build the
//! symbolic derivative once.
//!
//! The accepted grammar is:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | ident | ident "(" args ")" | "(" expr ")" ;
//! args    = expr { "," expr } ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//!         | "." digits [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ident   = letter { letter | digit | "_" } ;
//! ```
//!
//! `^` binds tighter than unary minus and is right associative; `*`, `/`,
//! `+`, `-` are left associative.

mod chart;
mod diff;
mod eval;
mod parse;
mod print;
mod simplify;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

pub use chart::Chart;
pub use eval::EvalFault;

use crate::numerics::Point;

/// Errors raised while building, parsing or evaluating expressions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: String,
        found: usize,
    },
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("domain error in `{node}` at {point}: {reason}")]
    Domain {
        node: String,
        point: String,
        reason: String,
    },
    #[error("derivative order must be at least 1")]
    ZeroOrder,
    #[error("point has {found} coordinates, chart expects {expected}")]
    PointDimension { expected: usize, found: usize },
    #[error("expression and chart mismatch: {0}")]
    ChartMismatch(String),
}

/// Elementary functions accepted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Sign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Cumulative integral `∫_{lower}^{u_var} integrand du_var`, evaluated by
/// composite Simpson quadrature at the current point.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub integrand: Arc<Expr>,
    pub var: usize,
    pub lower: f64,
    pub panels: usize,
}

/// Expression tree. Coordinates are stored by chart index.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord(usize),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
    Integral(Arc<Integral>),
}

impl Expr {
    pub fn num(c: f64) -> Arc<Expr> {
        Arc::new(Expr::Num(c))
    }

    pub fn coord(i: usize) -> Arc<Expr> {
        Arc::new(Expr::Coord(i))
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_num() == Some(1.0)
    }

    /// Whether coordinate `i` occurs anywhere in the tree, including inside
    /// integrands and as an integration variable.
    pub fn depends_on(&self, i: usize) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Coord(j) => *j == i,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(i),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on(i) || b.depends_on(i),
            Expr::Integral(int) => int.var == i || int.integrand.depends_on(i),
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Coord(j) => Some(*j),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_coord(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.max_coord().max(b.max_coord()),
            Expr::Integral(int) => Some(int.var).max(int.integrand.max_coord()),
        }
    }

    /// Replaces the panel count of every integral node.
    pub fn with_panels(self: &Arc<Expr>, panels: usize) -> Arc<Expr> {
        match &**self {
            Expr::Num(_) | Expr::Coord(_) => self.clone(),
            Expr::Neg(a) => Arc::new(Expr::Neg(a.with_panels(panels))),
            Expr::Call(f, a) => Arc::new(Expr::Call(*f, a.with_panels(panels))),
            Expr::Add(a, b) => Arc::new(Expr::Add(a.with_panels(panels), b.with_panels(panels))),
            Expr::Sub(a, b) => Arc::new(Expr::Sub(a.with_panels(panels), b.with_panels(panels))),
            Expr::Mul(a, b) => Arc::new(Expr::Mul(a.with_panels(panels), b.with_panels(panels))),
            Expr::Div(a, b) => Arc::new(Expr::Div(a.with_panels(panels), b.with_panels(panels))),
            Expr::Pow(a, b) => Arc::new(Expr::Pow(a.with_panels(panels), b.with_panels(panels))),
            Expr::Integral(int) => Arc::new(Expr::Integral(Arc::new(Integral {
                integrand: int.integrand.with_panels(panels),
                var: int.var,
                lower: int.lower,
                panels,
            }))),
        }
    }

    /// Number of nodes, used to bound expression swell in tests.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Coord(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => 1 + a.size() + b.size(),
            Expr::Integral(int) => 1 + int.integrand.size(),
        }
    }
}

/// Default panel count for integral nodes.
pub const DEFAULT_PANELS: usize = 4096;

type DerivCache = RwLock<HashMap<Vec<usize>, Arc<Expr>>>;

/// An expression bound to a chart, with memoized partial derivatives.
#[derive(Clone)]
pub struct ScalarField {
    chart: Arc<Chart>,
    body: Arc<Expr>,
    cache: Arc<DerivCache>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self)
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.chart == other.chart && self.body == other.body
    }
}

impl ScalarField {
    pub fn new(chart: Arc<Chart>, body: Arc<Expr>) -> Result<Self, ExprError> {
        if let Some(i) = body.max_coord() {
            if i >= chart.dim() {
                return Err(ExprError::ChartMismatch(format!(
                    "coordinate index {i} outside chart of dimension {}",
                    chart.dim()
                )));
            }
        }
        Ok(Self::from_parts(chart, body))
    }

    pub(crate) fn from_parts(chart: Arc<Chart>, body: Arc<Expr>) -> Self {
        Self {
            chart,
            body,
            cache: Arc::new(RwLock::new(HashMap::new())),
        }
    }

    pub fn parse(source: &str, chart: &Arc<Chart>) -> Result<Self, ExprError> {
        Self::parse_with_constants(source, chart, &BTreeMap::new())
    }

    /// Parses `source`, resolving identifiers first against the chart and then
    /// against `constants`.
    pub fn parse_with_constants(
        source: &str,
        chart: &Arc<Chart>,
        constants: &BTreeMap<String, f64>,
    ) -> Result<Self, ExprError> {
        let body = parse::parse(source, chart, constants)?;
        Ok(Self::from_parts(chart.clone(), body))
    }

    pub fn constant(chart: &Arc<Chart>, c: f64) -> Self {
        Self::from_parts(chart.clone(), Expr::num(c))
    }

    pub fn coordinate(chart: &Arc<Chart>, name: &str) -> Result<Self, ExprError> {
        let i = chart
            .index_of(name)
            .ok_or_else(|| ExprError::UnknownCoordinate(name.to_string()))?;
        Ok(Self::from_parts(chart.clone(), Expr::coord(i)))
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn body(&self) -> &Arc<Expr> {
        &self.body
    }

    pub fn with_body(&self, body: Arc<Expr>) -> Self {
        Self::from_parts(self.chart.clone(), body)
    }

    pub fn is_constant(&self) -> bool {
        self.body.max_coord().is_none()
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.body.depends_on(i)
    }

    /// `order`-th derivative with respect to the named coordinate.
    pub fn differentiate(&self, coord: &str, order: usize) -> Result<Self, ExprError> {
        if order == 0 {
            return Err(ExprError::ZeroOrder);
        }
        let i = self
            .chart
            .index_of(coord)
            .ok_or_else(|| ExprError::UnknownCoordinate(coord.to_string()))?;
        let idx = vec![i; order];
        Ok(self.with_body(self.partial(&idx)))
    }

    /// Mixed partial derivative over the multi-index `idx` (any order of
    /// entries; the result is memoized under the sorted multi-index).
    pub fn partial(&self, idx: &[usize]) -> Arc<Expr> {
        if idx.is_empty() {
            return self.body.clone();
        }
        let mut key = idx.to_vec();
        key.sort_unstable();
        if let Some(hit) = self
            .cache
            .read()
            .expect("derivative cache poisoned")
            .get(&key)
        {
            return hit.clone();
        }
        let (last, rest) = key.split_last().expect("non-empty multi-index");
        let parent = self.partial(rest);
        let d = diff::derivative(&parent, *last);
        self.cache
            .write()
            .expect("derivative cache poisoned")
            .entry(key)
            .or_insert(d)
            .clone()
    }

    /// Partial derivative as a field.
    pub fn partial_field(&self, idx: &[usize]) -> Self {
        self.with_body(self.partial(idx))
    }

    pub fn simplify(&self) -> Self {
        self.with_body(simplify::simplify(&self.body))
    }

    pub fn evaluate(&self, p: &Point) -> Result<f64, ExprError> {
        self.eval_coords(p.coords())
    }

    pub fn eval_coords(&self, coords: &[f64]) -> Result<f64, ExprError> {
        if coords.len() != self.chart.dim() {
            return Err(ExprError::PointDimension {
                expected: self.chart.dim(),
                found: coords.len(),
            });
        }
        eval::eval(&self.body, coords).map_err(|fault| self.domain_error(fault, coords))
    }

    /// Evaluates the memoized partial `idx` at `coords`.
    pub fn eval_partial(&self, idx: &[usize], coords: &[f64]) -> Result<f64, ExprError> {
        let d = self.partial(idx);
        eval::eval(&d, coords).map_err(|fault| self.domain_error(fault, coords))
    }

    fn domain_error(&self, fault: EvalFault, coords: &[f64]) -> ExprError {
        let point = self
            .chart
            .names()
            .iter()
            .zip(coords)
            .map(|(n, x)| format!("{n}={x}"))
            .collect::<Vec<_>>()
            .join(", ");
        ExprError::Domain {
            node: print::render(&fault.node, &self.chart),
            point: format!("({point})"),
            reason: fault.reason.to_string(),
        }
    }

    pub fn with_panels(&self, panels: usize) -> Self {
        self.with_body(self.body.with_panels(panels))
    }

    fn combine(&self, other: &Self, f: impl FnOnce(Arc<Expr>, Arc<Expr>) -> Arc<Expr>) -> Self {
        assert_eq!(
            self.chart, other.chart,
            "scalar fields combined across different charts"
        );
        self.with_body(f(self.body.clone(), other.body.clone()))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, simplify::add)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, simplify::sub)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.combine(other, simplify::mul)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.combine(other, simplify::div)
    }

    pub fn neg(&self) -> Self {
        self.with_body(simplify::neg(self.body.clone()))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.with_body(simplify::mul(Expr::num(c), self.body.clone()))
    }

    pub fn powf(&self, c: f64) -> Self {
        self.with_body(simplify::pow(self.body.clone(), Expr::num(c)))
    }

    pub fn apply(&self, func: Func) -> Self {
        self.with_body(simplify::call(func, self.body.clone()))
    }

    /// `∫_{lower}^{coord} self d(coord)` as a cumulative-quadrature field.
    pub fn integrate(&self, coord: usize, lower: f64, panels: usize) -> Self {
        self.with_body(simplify::integral(self.body.clone(), coord, lower, panels))
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::render(&self.body, &self.chart))
    }
}

pub use simplify::{add, call, div, integral, mul, neg, pow, sub};

/// Renders a bare tree with coordinate names from `chart`.
pub fn render(expr: &Expr, chart: &Chart) -> String {
    print::render(expr, chart)
}

/// Evaluates a bare tree at `coords`.
pub fn eval_expr(expr: &Expr, coords: &[f64]) -> Result<f64, EvalFault> {
    eval::eval(expr, coords)
}

/// Symbolic derivative of a bare tree with respect to coordinate `i`.
pub fn derivative(expr: &Arc<Expr>, i: usize) -> Arc<Expr> {
    diff::derivative(expr, i)
}
