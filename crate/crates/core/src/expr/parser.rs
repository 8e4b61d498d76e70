use std::sync::Arc;

use super::ast::{ExprAst, Factor, Node, NodeKind, Term, UnaryFn};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let literal = &text[start..i];
                let value: f64 = literal
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{literal}`")))?;
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap();
                return Err(syntax(i, format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let offset = self.offset();
        let mut terms = vec![Term {
            negated: false,
            node: self.term()?,
        }];
        loop {
            let negated = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => break,
            };
            self.bump();
            terms.push(Term {
                negated,
                node: self.term()?,
            });
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap().node
        } else {
            Node {
                kind: NodeKind::Sum(terms),
                offset,
            }
        })
    }

    fn term(&mut self) -> Result<Node> {
        let offset = self.offset();
        let mut factors = vec![Factor {
            inverted: false,
            node: self.unary()?,
        }];
        loop {
            let inverted = match self.peek() {
                Tok::Star => false,
                Tok::Slash => true,
                _ => break,
            };
            self.bump();
            factors.push(Factor {
                inverted,
                node: self.unary()?,
            });
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap().node
        } else {
            Node {
                kind: NodeKind::Product(factors),
                offset,
            }
        })
    }

    fn unary(&mut self) -> Result<Node> {
        if *self.peek() == Tok::Minus {
            let (_, offset) = self.bump();
            let inner = self.unary()?;
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(inner)),
                offset,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = self.exponent()?;
        if *self.peek() == Tok::Caret {
            return Err(syntax(self.offset(), "chained powers need parentheses"));
        }
        let offset = base.offset;
        Ok(Node {
            kind: NodeKind::Pow(Box::new(base), exponent),
            offset,
        })
    }

    fn exponent(&mut self) -> Result<f64> {
        let parenthesized = *self.peek() == Tok::LParen;
        if parenthesized {
            self.bump();
        }
        let sign = if *self.peek() == Tok::Minus {
            self.bump();
            -1.0
        } else {
            1.0
        };
        let value = match self.bump() {
            (Tok::Num(v), _) => sign * v,
            (_, offset) => return Err(syntax(offset, "exponent must be a numeric constant")),
        };
        if parenthesized {
            self.expect(Tok::RParen, "`)` after exponent")?;
        }
        Ok(value)
    }

    fn atom(&mut self) -> Result<Node> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Node {
                kind: NodeKind::Const(v),
                offset,
            }),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let func = UnaryFn::from_name(&name).ok_or_else(|| Error::UnknownIdentifier {
                        name: name.clone(),
                        offset,
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Node {
                        kind: NodeKind::Call(func, Box::new(arg)),
                        offset,
                    });
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Node {
                        kind: NodeKind::Var(i),
                        offset,
                    }),
                    None => Err(Error::UnknownIdentifier { name, offset }),
                }
            }
            Tok::End => Err(syntax(offset, "unexpected end of input")),
            other => Err(syntax(offset, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses `text`, resolving identifiers against `vars` (in order).
pub fn parse(text: &str, vars: &[impl AsRef<str>]) -> Result<ExprAst> {
    if text.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let vars: Arc<[String]> = vars.iter().map(|v| v.as_ref().to_string()).collect();
    let mut parser = Parser {
        tokens: lex(text)?,
        pos: 0,
        vars: &vars,
    };
    let root = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(syntax(parser.offset(), "unexpected trailing input"));
    }
    Ok(ExprAst { root, vars })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::Jet4;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn half_square() {
        let ast = parse("y1^2/2", &vars(&["y1"])).unwrap();
        assert_eq!(ast.eval(&[3.0]).unwrap(), 4.5);
    }

    #[test]
    fn unterminated_call() {
        let err = parse("log(", &vars(&["y1"])).unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                offset: 4,
                message: "unexpected end of input".into()
            }
        );
    }

    #[test]
    fn neg_log_sum() {
        let ast = parse("-log(y1)-log(y2)", &vars(&["y1", "y2"])).unwrap();
        let v = ast.eval(&[1.0, 2.0]).unwrap();
        assert!((v + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("y1 + z", &vars(&["y1"])).unwrap_err();
        assert_eq!(
            err,
            Error::UnknownIdentifier {
                name: "z".into(),
                offset: 5
            }
        );
        assert!(matches!(
            parse("sin(y1)", &vars(&["y1"])),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn log_of_negative_is_located() {
        let ast = parse("1 + log(y1)", &vars(&["y1"])).unwrap();
        assert_eq!(
            ast.eval(&[-1.0]).unwrap_err(),
            Error::Domain {
                op: "log",
                value: -1.0,
                at: Some(4)
            }
        );
    }

    #[test]
    fn exp_jet_all_ones() {
        let ast = parse("exp(y1)", &vars(&["y1"])).unwrap();
        let jet = ast.eval(&Jet4::seed(&[0.0])).unwrap();
        for k in 0..=4u8 {
            assert_eq!(jet.derivative(&[k]).unwrap(), 1.0);
        }
    }

    #[test]
    fn bilinear_jet() {
        let ast = parse("y1*y2", &vars(&["y1", "y2"])).unwrap();
        let jet = ast.eval(&Jet4::seed(&[2.0, 3.0])).unwrap();
        assert_eq!(jet.d(&[0, 1]), 1.0);
        assert_eq!(jet.d(&[0, 0]), 0.0);
        assert_eq!(jet.d(&[1, 1]), 0.0);
    }

    #[test]
    fn precedence_and_associativity() {
        let v = vars(&["a", "b"]);
        let eval = |s: &str| parse(s, &v).unwrap().eval(&[2.0, 3.0]).unwrap();
        assert_eq!(eval("-a^2"), -4.0);
        assert_eq!(eval("a - b - 1"), -2.0);
        assert_eq!(eval("a / b * 3"), 2.0);
        assert_eq!(eval("a + b * 2"), 8.0);
        assert_eq!(eval("(a + b) * 2"), 10.0);
        assert_eq!(eval("a^(-1)"), 0.5);
        assert_eq!(eval("a^-2"), 0.25);
        assert_eq!(eval("2.5e1 - 5E+0"), 20.0);
        assert!(parse("a^2^3", &v).is_err());
        assert!(parse("a^b", &v).is_err());
        assert!(parse("a b", &v).is_err());
        assert!(parse("   ", &v).is_err());
    }

    #[test]
    fn printer_round_trip() {
        let v = vars(&["y1", "y2"]);
        for text in [
            "y1^2/2 + y2^2/2",
            "-log(y1) - log(y2)",
            "-(y1*y2)",
            "(-y1)^3",
            "y1 - (y2 - 1)",
            "y1/(y2*y1)",
            "exp(-y1^2)*sqrt(1 + y2^2)",
            "y1^(-0.5) - --y2",
            "0.125*y1 + 1e-20",
        ] {
            let first = parse(text, &v).unwrap();
            let printed = first.to_string();
            let second = parse(&printed, &v).unwrap();
            assert_eq!(first.root().kind, second.root().kind, "{text} -> {printed}");
            assert_eq!(printed, second.to_string());
        }
    }
}
