// Recursive-descent parser for the map DSL.
//
//   expr    = term { ("+" | "-") term }
//   term    = unary { ("*" | "/") unary }
//   unary   = "-" unary | primary
//   primary = number | imaginary | name | call | "(" expr ")"
//   call    = "exp" "(" expr ")"
//           | "compose" "(" expr "," expr ")"
//           | "iterate" "(" expr "," integer ")"
//
// Divisors must be constant; `x / c` becomes `x * (1/c)`.

use num_complex::Complex64;

use super::{Bindings, ExprError, MapExpr};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        offset,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, offset: start });
            pos += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'.' {
                pos += 1;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
            }
            // exponent only when digits follow, so `2e` is not swallowed
            if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                let mut look = pos + 1;
                if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                    look += 1;
                }
                if look < bytes.len() && bytes[look].is_ascii_digit() {
                    pos = look;
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
            }
            let value: f64 = text[start..pos]
                .parse()
                .map_err(|_| syntax(start, format!("malformed number `{}`", &text[start..pos])))?;
            let imaginary = pos < bytes.len()
                && bytes[pos] == b'i'
                && !bytes
                    .get(pos + 1)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_');
            if imaginary {
                pos += 1;
                out.push(Token {
                    tok: Tok::Imag(value),
                    offset: start,
                });
            } else {
                out.push(Token {
                    tok: Tok::Num(value),
                    offset: start,
                });
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..pos].to_string()),
                offset: start,
            });
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err(syntax(start, format!("unexpected character `{ch}`")));
    }
    out.push(Token {
        tok: Tok::End,
        offset: text.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    bindings: &'a Bindings,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        let t = self.next();
        if t.tok == want {
            Ok(())
        } else {
            Err(syntax(t.offset, format!("expected {what}, found {}", describe(&t.tok))))
        }
    }

    fn expr(&mut self) -> Result<MapExpr, ExprError> {
        let mut left = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    let right = self.term()?;
                    left = MapExpr::sum(left, right);
                }
                Tok::Minus => {
                    self.next();
                    let right = self.term()?;
                    left = MapExpr::sum(left, MapExpr::negate(right));
                }
                _ => return Ok(left),
            }
        }
    }

    fn term(&mut self) -> Result<MapExpr, ExprError> {
        let mut left = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    let right = self.unary()?;
                    left = MapExpr::product(left, right);
                }
                Tok::Slash => {
                    let offset = self.next().offset;
                    let divisor = self.unary()?;
                    if divisor.depends_on_var() {
                        return Err(ExprError::NonConstantDivisor { offset });
                    }
                    let value = divisor
                        .eval(Complex64::new(0.0, 0.0))
                        .map_err(|_| ExprError::DivisionByZero { offset })?;
                    if value == Complex64::new(0.0, 0.0) {
                        return Err(ExprError::DivisionByZero { offset });
                    }
                    left = MapExpr::product(left, MapExpr::constant(value.inv()));
                }
                _ => return Ok(left),
            }
        }
    }

    fn unary(&mut self) -> Result<MapExpr, ExprError> {
        if self.peek().tok == Tok::Minus {
            self.next();
            return Ok(MapExpr::negate(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<MapExpr, ExprError> {
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(MapExpr::real(v)),
            Tok::Imag(v) => Ok(MapExpr::constant(Complex64::new(0.0, v))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.named(&name, t.offset),
            other => Err(syntax(
                t.offset,
                format!("expected an operand, found {}", describe(&other)),
            )),
        }
    }

    fn named(&mut self, name: &str, offset: usize) -> Result<MapExpr, ExprError> {
        match name {
            "z" => Ok(MapExpr::var()),
            "pi" => Ok(MapExpr::param("pi", Complex64::new(std::f64::consts::PI, 0.0))),
            "e" => Ok(MapExpr::param("e", Complex64::new(std::f64::consts::E, 0.0))),
            "i" => Ok(MapExpr::param("i", Complex64::new(0.0, 1.0))),
            "exp" => {
                self.expect(Tok::LParen, "`(` after exp")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(MapExpr::exp(arg))
            }
            "compose" => {
                self.expect(Tok::LParen, "`(` after compose")?;
                let outer = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(MapExpr::compose(outer, inner))
            }
            "iterate" => {
                self.expect(Tok::LParen, "`(` after iterate")?;
                let child = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let count_tok = self.next();
                let count = match count_tok.tok {
                    Tok::Num(v) if v.fract() == 0.0 && v.abs() < 1e9 => v as i64,
                    Tok::Minus => match self.next().tok {
                        Tok::Num(v) if v.fract() == 0.0 && v.abs() < 1e9 => -(v as i64),
                        _ => return Err(syntax(count_tok.offset, "expected an integer iterate count")),
                    },
                    _ => return Err(syntax(count_tok.offset, "expected an integer iterate count")),
                };
                if count < 1 {
                    return Err(ExprError::InvalidIterate {
                        count,
                        offset: count_tok.offset,
                    });
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(MapExpr::iterate(child, count as u32))
            }
            _ => match self.bindings.get(name) {
                Some(value) => Ok(MapExpr::param(name, value)),
                None => Err(ExprError::UnboundParameter {
                    name: name.to_string(),
                    offset,
                }),
            },
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number `{v}`"),
        Tok::Imag(v) => format!("number `{v}i`"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parses a DSL string into a [`MapExpr`], resolving named parameters from `bindings`.
pub fn parse(text: &str, bindings: &Bindings) -> Result<MapExpr, ExprError> {
    if text.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        bindings,
    };
    let e = parser.expr()?;
    let t = parser.peek();
    if t.tok != Tok::End {
        return Err(syntax(t.offset, format!("unexpected {}", describe(&t.tok))));
    }
    Ok(e)
}
