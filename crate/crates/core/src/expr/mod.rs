//! Expression trees for entire maps of one complex variable.
//!
//! The grammar covers exp-affine towers: sums, products, negation, `exp`,
//! plus explicit composition and iteration nodes. Composition and iteration
//! are expanded away by [`MapExpr::normalize`] before any downstream
//! evaluator sees the tree.

mod parse;

use std::fmt;

use num_complex::Complex64;

pub use parse::parse;

/// Default node cap applied by [`MapExpr::normalize`].
pub const DEFAULT_NODE_CAP: usize = 10_000;

/// Names the parser treats as built-ins; bindings may not shadow them.
pub const RESERVED_NAMES: &[&str] = &["z", "exp", "compose", "iterate", "pi", "e", "i"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unbound parameter `{name}` at offset {offset}")]
    UnboundParameter { name: String, offset: usize },
    #[error("iterate count must be at least 1 (got {count}) at offset {offset}")]
    InvalidIterate { count: i64, offset: usize },
    #[error("divisor at offset {offset} depends on z; only constant divisors are allowed")]
    NonConstantDivisor { offset: usize },
    #[error("division by zero at offset {offset}")]
    DivisionByZero { offset: usize },
    #[error("expanded expression exceeds the node cap of {cap}")]
    TooLarge { cap: usize },
    #[error("duplicate parameter binding `{0}`")]
    DuplicateBinding(String),
    #[error("`{0}` is a reserved name and cannot be bound")]
    ReservedName(String),
    #[error("invalid parameter name `{0}`")]
    InvalidName(String),
}

/// A named complex parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBinding {
    pub name: String,
    pub value: Complex64,
}

/// An ordered set of parameter bindings with unique names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    entries: Vec<ParameterBinding>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Complex64) -> Result<(), ExprError> {
        if RESERVED_NAMES.contains(&name) {
            return Err(ExprError::ReservedName(name.to_string()));
        }
        let mut chars = name.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(ExprError::InvalidName(name.to_string()));
        }
        if self.get(name).is_some() {
            return Err(ExprError::DuplicateBinding(name.to_string()));
        }
        self.entries.push(ParameterBinding {
            name: name.to_string(),
            value,
        });
        Ok(())
    }

    pub fn with(mut self, name: &str, value: Complex64) -> Result<Self, ExprError> {
        self.insert(name, value)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<Complex64> {
        self.entries.iter().find(|b| b.name == name).map(|b| b.value)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParameterBinding> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Signals that an intermediate value left the representable range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("arithmetic overflow during evaluation")]
pub struct Overflow;

/// Abstract syntax tree of an entire map in the single variable `z`.
///
/// Build trees through the associated constructors ([`MapExpr::sum`],
/// [`MapExpr::negate`], ...) rather than the raw variants: they fold literal
/// negation and `real + imaginary` literal pairs so that printing and
/// re-parsing reproduce the same tree.
#[derive(Debug, Clone, PartialEq)]
pub enum MapExpr {
    Var,
    Const(Complex64),
    Param {
        name: String,
        value: Complex64,
    },
    Sum(Box<MapExpr>, Box<MapExpr>),
    Product(Box<MapExpr>, Box<MapExpr>),
    Negate(Box<MapExpr>),
    Exp(Box<MapExpr>),
    /// `outer(inner(z))`
    Compose(Box<MapExpr>, Box<MapExpr>),
    /// n-fold self-composition, n >= 1
    Iterate(Box<MapExpr>, u32),
}

impl MapExpr {
    pub fn var() -> Self {
        MapExpr::Var
    }

    pub fn constant(value: Complex64) -> Self {
        MapExpr::Const(value)
    }

    pub fn real(value: f64) -> Self {
        MapExpr::Const(Complex64::new(value, 0.0))
    }

    pub fn param(name: &str, value: Complex64) -> Self {
        MapExpr::Param {
            name: name.to_string(),
            value,
        }
    }

    pub fn sum(left: MapExpr, right: MapExpr) -> Self {
        match (&left, &right) {
            (MapExpr::Const(a), MapExpr::Const(b)) if a.im == 0.0 && b.re == 0.0 => {
                MapExpr::Const(Complex64::new(a.re, b.im))
            }
            _ => MapExpr::Sum(Box::new(left), Box::new(right)),
        }
    }

    pub fn product(left: MapExpr, right: MapExpr) -> Self {
        MapExpr::Product(Box::new(left), Box::new(right))
    }

    pub fn negate(child: MapExpr) -> Self {
        match child {
            MapExpr::Const(c) => MapExpr::Const(-c),
            other => MapExpr::Negate(Box::new(other)),
        }
    }

    pub fn exp(child: MapExpr) -> Self {
        MapExpr::Exp(Box::new(child))
    }

    /// Composition node: evaluates as `outer(inner(z))`.
    pub fn compose(outer: MapExpr, inner: MapExpr) -> Self {
        MapExpr::Compose(Box::new(outer), Box::new(inner))
    }

    /// n-fold iterate. Panics if `n == 0`; the parser reports that case as an error.
    pub fn iterate(child: MapExpr, n: u32) -> Self {
        assert!(n >= 1, "iterate count must be at least 1");
        MapExpr::Iterate(Box::new(child), n)
    }

    /// Number of nodes in this tree as written (no expansion).
    pub fn node_count(&self) -> usize {
        match self {
            MapExpr::Var | MapExpr::Const(_) | MapExpr::Param { .. } => 1,
            MapExpr::Sum(a, b) | MapExpr::Product(a, b) | MapExpr::Compose(a, b) => 1 + a.node_count() + b.node_count(),
            MapExpr::Negate(a) | MapExpr::Exp(a) | MapExpr::Iterate(a, _) => 1 + a.node_count(),
        }
    }

    /// Whether the expanded tree mentions `z` at all.
    pub fn depends_on_var(&self) -> bool {
        match self {
            MapExpr::Var => true,
            MapExpr::Const(_) | MapExpr::Param { .. } => false,
            MapExpr::Sum(a, b) | MapExpr::Product(a, b) => a.depends_on_var() || b.depends_on_var(),
            MapExpr::Negate(a) | MapExpr::Exp(a) | MapExpr::Iterate(a, _) => a.depends_on_var(),
            MapExpr::Compose(o, i) => o.depends_on_var() && i.depends_on_var(),
        }
    }

    /// True iff the expanded tree contains at least one `exp` node.
    pub fn is_transcendental(&self) -> bool {
        match self {
            MapExpr::Var | MapExpr::Const(_) | MapExpr::Param { .. } => false,
            MapExpr::Exp(_) => true,
            MapExpr::Sum(a, b) | MapExpr::Product(a, b) => a.is_transcendental() || b.is_transcendental(),
            MapExpr::Negate(a) | MapExpr::Iterate(a, _) => a.is_transcendental(),
            MapExpr::Compose(o, i) => o.is_transcendental() || (o.depends_on_var() && i.is_transcendental()),
        }
    }

    /// True when no `Compose`/`Iterate` node remains.
    pub fn is_normalized(&self) -> bool {
        match self {
            MapExpr::Var | MapExpr::Const(_) | MapExpr::Param { .. } => true,
            MapExpr::Sum(a, b) | MapExpr::Product(a, b) => a.is_normalized() && b.is_normalized(),
            MapExpr::Negate(a) | MapExpr::Exp(a) => a.is_normalized(),
            MapExpr::Compose(..) | MapExpr::Iterate(..) => false,
        }
    }

    /// Expands every `Compose`/`Iterate` node, capped at [`DEFAULT_NODE_CAP`] nodes.
    pub fn normalize(&self) -> Result<MapExpr, ExprError> {
        self.normalize_with_cap(DEFAULT_NODE_CAP)
    }

    pub fn normalize_with_cap(&self, cap: usize) -> Result<MapExpr, ExprError> {
        let mut budget = cap;
        self.substitute(&MapExpr::Var, 1, &mut budget, cap)
    }

    // Rebuilds `self` with `z` replaced by `arg` (already expanded, `arg_size` nodes).
    fn substitute(&self, arg: &MapExpr, arg_size: usize, budget: &mut usize, cap: usize) -> Result<MapExpr, ExprError> {
        let mut spend = |n: usize| -> Result<(), ExprError> {
            *budget = budget.checked_sub(n).ok_or(ExprError::TooLarge { cap })?;
            Ok(())
        };
        Ok(match self {
            MapExpr::Var => {
                spend(arg_size)?;
                arg.clone()
            }
            MapExpr::Const(_) | MapExpr::Param { .. } => {
                spend(1)?;
                self.clone()
            }
            MapExpr::Sum(a, b) => {
                spend(1)?;
                let a = a.substitute(arg, arg_size, budget, cap)?;
                let b = b.substitute(arg, arg_size, budget, cap)?;
                MapExpr::sum(a, b)
            }
            MapExpr::Product(a, b) => {
                spend(1)?;
                let a = a.substitute(arg, arg_size, budget, cap)?;
                let b = b.substitute(arg, arg_size, budget, cap)?;
                MapExpr::product(a, b)
            }
            MapExpr::Negate(a) => {
                spend(1)?;
                MapExpr::negate(a.substitute(arg, arg_size, budget, cap)?)
            }
            MapExpr::Exp(a) => {
                spend(1)?;
                MapExpr::exp(a.substitute(arg, arg_size, budget, cap)?)
            }
            MapExpr::Compose(outer, inner) => {
                // The inner expansion is scratch work; only the final tree counts.
                let mut scratch = cap;
                let inner = inner.substitute(arg, arg_size, &mut scratch, cap)?;
                let inner_size = inner.node_count();
                outer.substitute(&inner, inner_size, budget, cap)?
            }
            MapExpr::Iterate(child, n) => {
                let mut acc = arg.clone();
                let mut acc_size = arg_size;
                for _ in 0..*n {
                    let mut scratch = cap;
                    acc = child.substitute(&acc, acc_size, &mut scratch, cap)?;
                    acc_size = acc.node_count();
                }
                spend(acc_size)?;
                acc
            }
        })
    }

    /// Evaluates the map at `z`; any non-finite intermediate is reported as [`Overflow`].
    pub fn eval(&self, z: Complex64) -> Result<Complex64, Overflow> {
        let v = match self {
            MapExpr::Var => z,
            MapExpr::Const(c) => *c,
            MapExpr::Param { value, .. } => *value,
            MapExpr::Sum(a, b) => a.eval(z)? + b.eval(z)?,
            MapExpr::Product(a, b) => a.eval(z)? * b.eval(z)?,
            MapExpr::Negate(a) => -a.eval(z)?,
            MapExpr::Exp(a) => a.eval(z)?.exp(),
            MapExpr::Compose(o, i) => o.eval(i.eval(z)?)?,
            MapExpr::Iterate(c, n) => {
                let mut w = z;
                for _ in 0..*n {
                    w = c.eval(w)?;
                }
                w
            }
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Overflow)
        }
    }

    /// Printed form with composition and iteration expanded. Equivalent to `to_string()`.
    pub fn format(&self) -> String {
        self.to_string()
    }

    fn render(&self, var: &Rendered) -> Rendered {
        match self {
            MapExpr::Var => var.clone(),
            MapExpr::Const(c) => render_const(*c),
            MapExpr::Param { name, .. } => Rendered::atom(name.clone()),
            MapExpr::Exp(a) => Rendered::atom(format!("exp({})", a.render(var).text)),
            MapExpr::Negate(a) => {
                let inner = a.render(var);
                let body = match inner.prec {
                    Prec::Atom => inner.text.clone(),
                    _ => format!("({})", inner.text),
                };
                // `a - x*y` already negates the whole term
                let negated_body = match inner.prec {
                    Prec::Product => inner.text,
                    _ => body.clone(),
                };
                Rendered {
                    text: format!("-{body}"),
                    prec: Prec::Unary,
                    negated_body: Some(negated_body),
                }
            }
            MapExpr::Sum(a, b) => {
                let left = a.render(var);
                let right = b.render(var);
                let text = match (&right.negated_body, right.prec) {
                    (Some(body), _) => format!("{} - {}", left.text, body),
                    (None, Prec::Sum) => format!("{} + ({})", left.text, right.text),
                    _ => format!("{} + {}", left.text, right.text),
                };
                Rendered {
                    text,
                    prec: Prec::Sum,
                    negated_body: None,
                }
            }
            MapExpr::Product(a, b) => {
                let left = a.render(var);
                let right = b.render(var);
                let l = match left.prec {
                    Prec::Sum => format!("({})", left.text),
                    _ => left.text,
                };
                let r = match right.prec {
                    Prec::Atom => right.text,
                    _ => format!("({})", right.text),
                };
                Rendered {
                    text: format!("{l}*{r}"),
                    prec: Prec::Product,
                    negated_body: None,
                }
            }
            MapExpr::Compose(o, i) => o.render(&i.render(var)),
            MapExpr::Iterate(c, n) => {
                let mut acc = var.clone();
                for _ in 0..*n {
                    acc = c.render(&acc);
                }
                acc
            }
        }
    }
}

impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&Rendered::atom("z".to_string())).text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Prec {
    Sum,
    Product,
    Unary,
    Atom,
}

#[derive(Debug, Clone)]
struct Rendered {
    text: String,
    prec: Prec,
    // For `-x` forms: the text to place after a binary minus.
    negated_body: Option<String>,
}

impl Rendered {
    fn atom(text: String) -> Self {
        Rendered {
            text,
            prec: Prec::Atom,
            negated_body: None,
        }
    }
}

fn render_real(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

fn render_const(c: Complex64) -> Rendered {
    let (re, im) = (c.re, c.im);
    if im == 0.0 {
        if re < 0.0 {
            let body = render_real(-re);
            return Rendered {
                text: format!("(-{body})"),
                prec: Prec::Atom,
                negated_body: Some(body),
            };
        }
        return Rendered::atom(render_real(re));
    }
    if re == 0.0 {
        if im > 0.0 {
            return Rendered::atom(format!("{}i", render_real(im)));
        }
        let body = format!("{}i", render_real(-im));
        return Rendered {
            text: format!("(-{body})"),
            prec: Prec::Atom,
            negated_body: Some(body),
        };
    }
    let re_text = if re < 0.0 {
        format!("-{}", render_real(-re))
    } else {
        render_real(re)
    };
    let sign = if im < 0.0 { '-' } else { '+' };
    Rendered::atom(format!("({re_text}{sign}{}i)", render_real(im.abs())))
}
