use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::diffops::{GenericField, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Exp,
    Log,
    Sqrt,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "exp" => Some(UnaryFn::Exp),
            "log" => Some(UnaryFn::Log),
            "sqrt" => Some(UnaryFn::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub negated: bool,
    pub node: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub inverted: bool,
    pub node: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Const(f64),
    /// Position in the declared variable list.
    Var(usize),
    Neg(Box<Node>),
    Call(UnaryFn, Box<Node>),
    Pow(Box<Node>, f64),
    /// Left-to-right sum; the first term is never negated.
    Sum(Vec<Term>),
    /// Left-to-right product; the first factor is never inverted.
    Product(Vec<Factor>),
}

/// Expression node with the byte offset where it starts in the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub offset: usize,
}

/// A parsed expression together with the variable list it was resolved
/// against. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    pub(crate) root: Node,
    pub(crate) vars: Arc<[String]>,
}

impl ExprAst {
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluates with `values[i]` bound to `vars()[i]`.
    pub fn eval<S: Scalar>(&self, values: &[S]) -> Result<S> {
        if values.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                found: values.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::Config(
                "expression has no variables; bind through eval_const".into(),
            ));
        }
        eval_node(&self.root, values, &values[0])
    }

    /// Evaluates with values looked up by name.
    pub fn eval_named<S: Scalar>(&self, bindings: &HashMap<String, S>) -> Result<S> {
        let values = self
            .vars
            .iter()
            .map(|name| {
                bindings.get(name).cloned().ok_or_else(|| Error::UnknownIdentifier {
                    name: name.clone(),
                    offset: 0,
                })
            })
            .collect::<Result<Vec<S>>>()?;
        self.eval(&values)
    }

    /// Evaluates where every variable is a plain real, but constants are
    /// shaped like `like` (used to evaluate parameter-free sub-expressions
    /// in a jet context).
    pub fn eval_with_shape<S: Scalar>(&self, values: &[S], like: &S) -> Result<S> {
        eval_node(&self.root, values, like)
    }
}

fn eval_node<S: Scalar>(node: &Node, values: &[S], like: &S) -> Result<S> {
    let located = |e: Error| e.located(node.offset);
    match &node.kind {
        NodeKind::Const(c) => Ok(like.constant_like(*c)),
        NodeKind::Var(i) => Ok(values[*i].clone()),
        NodeKind::Neg(inner) => Ok(-eval_node(inner, values, like)?),
        NodeKind::Call(f, arg) => {
            let x = eval_node(arg, values, like)?;
            match f {
                UnaryFn::Exp => {
                    let out = x.exp();
                    if out.real().is_finite() {
                        Ok(out)
                    } else {
                        Err(located(Error::domain("exp", x.real())))
                    }
                }
                UnaryFn::Log => x.try_ln().map_err(located),
                UnaryFn::Sqrt => x.try_sqrt().map_err(located),
            }
        }
        NodeKind::Pow(base, exponent) => eval_node(base, values, like)?.try_pow(*exponent).map_err(located),
        NodeKind::Sum(terms) => {
            let mut acc: Option<S> = None;
            for term in terms {
                let v = eval_node(&term.node, values, like)?;
                acc = Some(match (acc, term.negated) {
                    (None, false) => v,
                    (None, true) => -v,
                    (Some(a), false) => a + v,
                    (Some(a), true) => a - v,
                });
            }
            Ok(acc.expect("sums have at least one term"))
        }
        NodeKind::Product(factors) => {
            let mut acc: Option<S> = None;
            for factor in factors {
                let v = eval_node(&factor.node, values, like)?;
                acc = Some(match (acc, factor.inverted) {
                    (None, false) => v,
                    (None, true) => v.try_recip().map_err(located)?,
                    (Some(a), false) => a * v,
                    (Some(a), true) => a.try_div(&v).map_err(|e| e.located(factor.node.offset))?,
                });
            }
            Ok(acc.expect("products have at least one factor"))
        }
    }
}

// Binding strength used by the printer: higher binds tighter.
fn strength(kind: &NodeKind) -> u8 {
    match kind {
        NodeKind::Sum(_) => 1,
        NodeKind::Product(_) => 2,
        NodeKind::Neg(_) => 3,
        NodeKind::Pow(..) => 4,
        NodeKind::Const(_) | NodeKind::Var(_) | NodeKind::Call(..) => 5,
    }
}

struct Printer<'a> {
    node: &'a Node,
    vars: &'a [String],
}

impl Printer<'_> {
    fn child<'b>(&'b self, node: &'b Node) -> Printer<'b> {
        Printer { node, vars: self.vars }
    }

    fn wrapped(&self, f: &mut fmt::Formatter<'_>, node: &Node, min_strength: u8) -> fmt::Result {
        if strength(&node.kind) < min_strength {
            write!(f, "({})", self.child(node))
        } else {
            write!(f, "{}", self.child(node))
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        write!(f, "{}", c as i64)
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node.kind {
            NodeKind::Const(c) => write_number(f, *c),
            NodeKind::Var(i) => write!(f, "{}", self.vars[*i]),
            NodeKind::Neg(inner) => {
                write!(f, "-")?;
                // a negated product or sum needs parentheses; -(-x) keeps its own
                self.wrapped(f, inner, 3)
            }
            NodeKind::Call(func, arg) => write!(f, "{}({})", func.name(), self.child(arg)),
            NodeKind::Pow(base, exponent) => {
                self.wrapped(f, base, 5)?;
                write!(f, "^")?;
                if *exponent < 0.0 {
                    write!(f, "(-")?;
                    write_number(f, -exponent)?;
                    write!(f, ")")
                } else {
                    write_number(f, *exponent)
                }
            }
            NodeKind::Sum(terms) => {
                for (k, term) in terms.iter().enumerate() {
                    match (k, term.negated) {
                        (0, _) => {}
                        (_, false) => write!(f, " + ")?,
                        (_, true) => write!(f, " - ")?,
                    }
                    // right operands of - must bind tighter than a sum
                    self.wrapped(f, &term.node, 2)?;
                }
                Ok(())
            }
            NodeKind::Product(factors) => {
                for (k, factor) in factors.iter().enumerate() {
                    match (k, factor.inverted) {
                        (0, _) => {}
                        (_, false) => write!(f, "*")?,
                        (_, true) => write!(f, "/")?,
                    }
                    self.wrapped(f, &factor.node, 3)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Printer { node: &self.root, vars: &self.vars })
    }
}

/// A scalar field backed by an expression; coordinates bind to the declared
/// variables in order.
#[derive(Debug, Clone)]
pub struct ExprField {
    ast: ExprAst,
}

impl ExprField {
    pub fn new(ast: ExprAst) -> Self {
        ExprField { ast }
    }

    pub fn ast(&self) -> &ExprAst {
        &self.ast
    }
}

impl GenericField for ExprField {
    fn arity(&self) -> usize {
        self.ast.vars.len()
    }

    fn eval<S: Scalar>(&self, y: &[S]) -> Result<S> {
        self.ast.eval(y)
    }
}
