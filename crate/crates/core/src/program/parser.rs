use super::{Loss, PointExpr, ProgramAst, Term};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
struct Pos {
    line: usize,
    column: usize,
}

struct Parser<'a> {
    chars: Vec<char>,
    at: usize,
    line: usize,
    column: usize,
    _src: &'a str,
}

fn err(pos: Pos, message: impl Into<String>) -> Error {
    Error::Parse {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn describe(c: Option<char>) -> String {
    match c {
        Some(c) => format!("'{c}'"),
        None => "end of input".to_string(),
    }
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().collect(),
            at: 0,
            line: 1,
            column: 1,
            _src: src,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.at += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn expect(&mut self, want: char, context: &str) -> Result<()> {
        self.skip_ws();
        let pos = self.pos();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            other => Err(err(
                pos,
                format!("expected '{want}' {context}, found {}", describe(other)),
            )),
        }
    }

    fn ident(&mut self) -> Option<(String, Pos)> {
        self.skip_ws();
        let pos = self.pos();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
            s.push(c);
            self.bump();
        }
        Some((s, pos))
    }

    fn starts_number(&self) -> bool {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => true,
            Some('.') => self.chars.get(self.at + 1).is_some_and(char::is_ascii_digit),
            _ => false,
        }
    }

    fn digits(&mut self, out: &mut String) -> usize {
        let mut n = 0;
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            out.push(c);
            self.bump();
            n += 1;
        }
        n
    }

    fn number(&mut self) -> Result<(f64, Pos)> {
        self.skip_ws();
        let pos = self.pos();
        let mut s = String::new();
        let int_digits = self.digits(&mut s);
        let mut frac_digits = 0;
        if self.peek() == Some('.') {
            s.push('.');
            self.bump();
            frac_digits = self.digits(&mut s);
        }
        if int_digits + frac_digits == 0 {
            return Err(err(pos, format!("expected number, found {}", describe(self.peek()))));
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            s.push('e');
            self.bump();
            if let Some(sign @ ('+' | '-')) = self.peek() {
                s.push(sign);
                self.bump();
            }
            if self.digits(&mut s) == 0 {
                return Err(err(self.pos(), "malformed exponent"));
            }
        }
        let v: f64 = s.parse().map_err(|_| err(pos, format!("malformed number '{s}'")))?;
        if !v.is_finite() {
            return Err(err(pos, format!("weight '{s}' is not finite")));
        }
        Ok((v, pos))
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let pos = self.pos();
        let mut s = String::new();
        if self.digits(&mut s) == 0 {
            return Err(err(pos, format!("expected dimension index, found {}", describe(self.peek()))));
        }
        s.parse().map_err(|_| err(pos, format!("dimension index '{s}' too large")))
    }

    fn argument(&mut self) -> Result<String> {
        self.skip_ws();
        let pos = self.pos();
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| !c.is_whitespace() && *c != ',' && *c != ')') {
            s.push(c);
            self.bump();
        }
        if s.is_empty() {
            return Err(err(pos, format!("expected argument, found {}", describe(self.peek()))));
        }
        Ok(s)
    }

    fn program(&mut self, dim: Option<usize>) -> Result<ProgramAst> {
        let mut terms = vec![self.term(dim)?];
        loop {
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('+') => {
                    self.bump();
                    terms.push(self.term(dim)?);
                }
                other => {
                    return Err(err(
                        self.pos(),
                        format!("expected '+' or end of input, found {}", describe(other)),
                    ))
                }
            }
        }
        Ok(ProgramAst { terms })
    }

    fn term(&mut self, dim: Option<usize>) -> Result<Term> {
        self.skip_ws();
        let weight = if self.starts_number() {
            let (w, _) = self.number()?;
            self.expect('*', "after weight")?;
            w
        } else {
            1.0
        };
        let start = self.pos();
        let (name, pos) = self
            .ident()
            .ok_or_else(|| err(start, format!("expected loss name, found {}", describe(self.peek()))))?;
        let takes_arg = match name.as_str() {
            "bn" | "aniso" | "anisotropy" | "disc" | "discrepancy" => false,
            "spec" | "spectral" | "pcf" | "differential" | "task" => true,
            "s" | "proj" | "prog" | "grid" => {
                return Err(err(pos, format!("expected loss name, found point expression '{name}'")))
            }
            _ => return Err(err(pos, format!("unknown loss '{name}'"))),
        };
        self.expect('(', &format!("after '{name}'"))?;
        let expr = self.expr(dim)?;
        let mut args = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() != Some(',') {
                break;
            }
            self.bump();
            args.push(self.argument()?);
        }
        self.expect(')', &format!("to close '{name}'"))?;
        let want = usize::from(takes_arg);
        if args.len() != want {
            return Err(err(
                pos,
                format!("'{name}' takes {want} argument(s) after the point expression, got {}", args.len()),
            ));
        }
        let arg = args.pop();
        let loss = match name.as_str() {
            "bn" => Loss::Bn,
            "aniso" | "anisotropy" => Loss::Aniso,
            "disc" | "discrepancy" => Loss::Disc,
            "spec" | "spectral" => Loss::Spec(arg.unwrap_or_default()),
            "pcf" | "differential" => Loss::Pcf(arg.unwrap_or_default()),
            _ => Loss::Task(arg.unwrap_or_default()),
        };
        Ok(Term { weight, loss, expr })
    }

    /// Parses a point expression. With `dim` known, dimension lists are
    /// checked against the dimension of the inner expression.
    fn expr(&mut self, dim: Option<usize>) -> Result<PointExpr> {
        self.skip_ws();
        let start = self.pos();
        let (name, pos) = self.ident().ok_or_else(|| {
            err(start, format!("expected point expression, found {}", describe(self.peek())))
        })?;
        match name.as_str() {
            "s" => Ok(PointExpr::Var),
            "prog" => {
                self.expect('(', "after 'prog'")?;
                let e = self.expr(dim)?;
                self.expect(')', "to close 'prog'")?;
                Ok(PointExpr::Prog(Box::new(e)))
            }
            "proj" | "grid" => {
                self.expect('(', &format!("after '{name}'"))?;
                let mut dims = Vec::new();
                loop {
                    self.skip_ws();
                    let dpos = self.pos();
                    let d = self.integer()?;
                    if dims.iter().any(|(x, _)| *x == d) {
                        return Err(err(dpos, format!("dimension {d} listed twice")));
                    }
                    dims.push((d, dpos));
                    self.expect(',', "in dimension list")?;
                    self.skip_ws();
                    if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        break;
                    }
                }
                let e = self.expr(dim)?;
                self.expect(')', &format!("to close '{name}'"))?;
                if let Some(n) = dim {
                    let inner = e.output_dim(n);
                    if let Some((d, dpos)) = dims.iter().find(|(d, _)| *d >= inner) {
                        return Err(err(
                            *dpos,
                            format!("dimension {d} out of range for {inner}-dimensional points"),
                        ));
                    }
                }
                let dims = dims.into_iter().map(|(d, _)| d).collect();
                Ok(if name == "proj" {
                    PointExpr::Proj(dims, Box::new(e))
                } else {
                    PointExpr::Grid(dims, Box::new(e))
                })
            }
            "bn" | "spec" | "pcf" | "aniso" | "disc" | "task" => Err(err(
                pos,
                format!("loss '{name}' cannot appear inside a point expression"),
            )),
            _ => Err(err(pos, format!("unknown point expression '{name}'"))),
        }
    }
}

/// Parses a sample program. Errors carry 1-based line and column.
pub fn parse(text: &str) -> Result<ProgramAst> {
    Parser::new(text).program(None)
}

/// Parses a program for `dim`-dimensional point sets, rejecting dimension
/// indices that are out of range at their position.
pub fn parse_for_dim(text: &str, dim: usize) -> Result<ProgramAst> {
    Parser::new(text).program(Some(dim))
}
