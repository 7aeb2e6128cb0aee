use super::{Expr, ExprError, Func, Var};

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

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Next token and its byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(&c) = bytes.get(start) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut e = end + 1;
                if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                    e += 1;
                }
                if e < bytes.len() && bytes[e].is_ascii_digit() {
                    while e < bytes.len() && bytes[e].is_ascii_digit() {
                        e += 1;
                    }
                    end = e;
                }
            }
            let text = &self.src[start..end];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            self.pos = end;
            return Ok((Tok::Num(v), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ExprError::Syntax {
            offset: start,
            message: format!("unexpected character '{ch}'"),
        })
    }
}

pub(super) enum Ident {
    Var(Var),
    Func(Func),
}

pub(super) fn classify_identifier(name: &str) -> Option<Ident> {
    if name == "t" {
        return Some(Ident::Var(Var::T));
    }
    if let Some(f) = Func::from_name(name) {
        return Some(Ident::Func(f));
    }
    let (ctor, digits): (fn(usize) -> Var, &str) = if let Some(d) = name.strip_prefix("xa") {
        (Var::Xa, d)
    } else if let Some(d) = name.strip_prefix("xb") {
        (Var::Xb, d)
    } else if let Some(d) = name.strip_prefix('x') {
        (Var::X, d)
    } else {
        (Var::U as fn(usize) -> Var, name.strip_prefix('u')?)
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    Some(Ident::Var(ctor(k - 1)))
}

fn var_index(v: Var) -> Option<usize> {
    match v {
        Var::T => None,
        Var::X(i) | Var::U(i) | Var::Xa(i) | Var::Xb(i) => Some(i),
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
    dim: usize,
}

// expr  := term (('+' | '-') term)*
// term  := unary (('*' | '/') unary)*
// unary := '-' unary | '+' unary | power
// power := atom ('^' unary)?
// atom  := number | variable | func '(' expr ')' | '(' expr ')'
impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ExprError> {
        let (t, o) = self.lexer.next()?;
        self.tok = t;
        self.offset = o;
        Ok(())
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset,
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.bump()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.tok {
            Tok::Minus => {
                self.bump()?;
                Ok(match self.unary()? {
                    Expr::Const(c) => Expr::Const(-c),
                    e => Expr::Neg(Box::new(e)),
                })
            }
            Tok::Plus => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.tok == Tok::Caret {
            self.bump()?;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let offset = self.offset;
                match classify_identifier(&name) {
                    Some(Ident::Var(v)) => {
                        if var_index(v).is_some_and(|i| i >= self.dim) {
                            return Err(ExprError::IndexOutOfRange {
                                offset,
                                name,
                                dim: self.dim,
                            });
                        }
                        self.bump()?;
                        Ok(Expr::Var(v))
                    }
                    Some(Ident::Func(f)) => {
                        self.bump()?;
                        if self.tok != Tok::LParen {
                            return self.error(format!("expected '(' after {}", f.name()));
                        }
                        self.bump()?;
                        let arg = self.expr()?;
                        self.expect_rparen()?;
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                    None => Err(ExprError::UnknownIdentifier { offset, name }),
                }
            }
            Tok::End => self.error("unexpected end of input"),
            other => {
                self.tok = other;
                self.error(format!("unexpected token {:?}", self.tok))
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.tok == Tok::RParen {
            self.bump()
        } else {
            self.error("expected ')'")
        }
    }
}

pub(super) fn parse(source: &str, dim: usize) -> Result<Expr, ExprError> {
    let mut p = Parser {
        lexer: Lexer { src: source, pos: 0 },
        tok: Tok::End,
        offset: 0,
        dim,
    };
    p.bump()?;
    if p.tok == Tok::End {
        return p.error("empty expression");
    }
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.error(format!("unexpected trailing {:?}", p.tok));
    }
    Ok(e)
}
