use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Chart, Expr, ExprError, Func, Integral, DEFAULT_PANELS};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn syntax(&self, offset: usize, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            offset,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, ExprError> {
        let bytes = self.src.as_bytes();
        let mut out = Vec::new();
        while self.pos < bytes.len() {
            let c = bytes[self.pos];
            let start = self.pos;
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else if c.is_ascii_digit() || c == b'.' {
                out.push((self.number()?, start));
            } else if c.is_ascii_alphabetic() {
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                out.push((Tok::Ident(self.src[start..self.pos].to_string()), start));
            } else if b"+-*/^(),".contains(&c) {
                self.pos += 1;
                out.push((Tok::Op(c as char), start));
            } else {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(self.syntax(start, format!("unexpected character `{ch}`")));
            }
        }
        out.push((Tok::End, self.src.len()));
        Ok(out)
    }

    fn number(&mut self) -> Result<Tok, ExprError> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let digits = |pos: &mut usize| {
            let s = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - s
        };
        let int_len = digits(&mut self.pos);
        let mut frac_len = 0;
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            frac_len = digits(&mut self.pos);
            if int_len > 0 && frac_len == 0 {
                return Err(self.syntax(self.pos, "expected digits after decimal point"));
            }
        }
        if int_len == 0 && frac_len == 0 {
            return Err(self.syntax(start, "malformed number"));
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if digits(&mut self.pos) == 0 {
                return Err(self.syntax(self.pos, "expected exponent digits"));
            }
        }
        if self.pos < bytes.len()
            && (bytes[self.pos].is_ascii_alphabetic() || bytes[self.pos] == b'_')
        {
            return Err(self.syntax(self.pos, "identifier cannot start with a digit"));
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| self.syntax(start, format!("malformed number `{text}`")))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    chart: &'a Chart,
    constants: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn offset(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{op}`")))
        }
    }

    fn unexpected(&self, wanted: &str) -> ExprError {
        let found = match self.peek() {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        };
        ExprError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Arc<Expr>, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Arc::new(Expr::Add(lhs, self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Arc::new(Expr::Sub(lhs, self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Expr>, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Arc::new(Expr::Mul(lhs, self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Arc::new(Expr::Div(lhs, self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Expr>, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Arc::new(Expr::Neg(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Expr>, ExprError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            // right operand goes through `unary` so that `a^-2` and `a^b^c` parse
            let exp = self.unary()?;
            return Ok(Arc::new(Expr::Pow(base, exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Arc<Expr>, ExprError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(x) => Ok(Expr::num(x)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') {
                    self.call(name, offset)
                } else if let Some(i) = self.chart.index_of(&name) {
                    Ok(Expr::coord(i))
                } else if let Some(c) = self.constants.get(&name) {
                    Ok(Expr::num(*c))
                } else {
                    Err(ExprError::UnknownIdentifier { name, offset })
                }
            }
            Tok::End => Err(self.unexpected("an operand")),
            Tok::Op(c) => Err(ExprError::Syntax {
                offset,
                message: format!("expected an operand, found `{c}`"),
            }),
        }
    }

    fn args(&mut self) -> Result<Vec<(Arc<Expr>, usize)>, ExprError> {
        self.expect('(')?;
        let mut args = Vec::new();
        loop {
            let at = self.offset();
            args.push((self.expr()?, at));
            match self.peek() {
                Tok::Op(',') => {
                    self.bump();
                }
                Tok::Op(')') => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.unexpected("`,` or `)`")),
            }
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Arc<Expr>, ExprError> {
        if name == "integrate" {
            return self.integral();
        }
        let func = Func::from_name(&name).ok_or_else(|| ExprError::UnknownIdentifier {
            name: name.clone(),
            offset,
        })?;
        let mut args = self.args()?;
        if args.len() != 1 {
            return Err(ExprError::Arity {
                name,
                expected: "1".into(),
                found: args.len(),
            });
        }
        Ok(Arc::new(Expr::Call(func, args.remove(0).0)))
    }

    /// `integrate(f, var, lower[, panels])`
    fn integral(&mut self) -> Result<Arc<Expr>, ExprError> {
        let args = self.args()?;
        if !(3..=4).contains(&args.len()) {
            return Err(ExprError::Arity {
                name: "integrate".into(),
                expected: "3 or 4".into(),
                found: args.len(),
            });
        }
        let var = match &*args[1].0 {
            Expr::Coord(i) => *i,
            _ => {
                return Err(ExprError::Syntax {
                    offset: args[1].1,
                    message: "integration variable must be a coordinate".into(),
                })
            }
        };
        let constant = |k: usize, what: &str| -> Result<f64, ExprError> {
            let folded = super::simplify::simplify(&args[k].0);
            folded.as_num().ok_or_else(|| ExprError::Syntax {
                offset: args[k].1,
                message: format!("{what} must be a constant"),
            })
        };
        let lower = constant(2, "lower bound")?;
        let panels = if args.len() == 4 {
            let p = constant(3, "panel count")?;
            if p < 2.0 || p.fract() != 0.0 || p as usize % 2 != 0 {
                return Err(ExprError::Syntax {
                    offset: args[3].1,
                    message: "panel count must be an even integer >= 2".into(),
                });
            }
            p as usize
        } else {
            DEFAULT_PANELS
        };
        Ok(Arc::new(Expr::Integral(Arc::new(Integral {
            integrand: args[0].0.clone(),
            var,
            lower,
            panels,
        }))))
    }
}

pub(super) fn parse(
    source: &str,
    chart: &Chart,
    constants: &BTreeMap<String, f64>,
) -> Result<Arc<Expr>, ExprError> {
    if source.trim().is_empty() {
        return Err(ExprError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let toks = Lexer {
        src: source,
        pos: 0,
    }
    .tokens()?;
    let mut p = Parser {
        toks,
        at: 0,
        chart,
        constants,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}
