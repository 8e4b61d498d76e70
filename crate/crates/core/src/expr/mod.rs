//! Arithmetic expressions over named variables.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | power ;
//! power    = atom [ "^" exponent ] ;
//! exponent = [ "-" ] number | "(" [ "-" ] number ")" ;
//! atom     = number | ident | func "(" expr ")" | "(" expr ")" ;
//! func     = "exp" | "log" | "sqrt" ;
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ident    = letter { letter | digit | "_" } ;
//! ```
//!
//! Precedence from tightest: `^`, unary minus, `* /`, `+ -`; binary
//! operators associate to the left. Exponents are constants, so `-y1^2`
//! is `-(y1^2)` and `y1^2^3` is rejected.

mod ast;
mod parser;

pub use ast::{ExprAst, ExprField, Factor, Node, NodeKind, Term, UnaryFn};
pub use parser::parse;

/// Variable names `y1..y{dim}`.
pub fn default_vars(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}
