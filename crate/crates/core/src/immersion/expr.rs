//! Expression language for immersions.
//!
//! ```text
//! spec     := "map" "(" params ")" "->" "(" expr { "," expr } ")"
//!             "ambient" space dim index [ "radius" number ] [ "domain" interval { "," interval } ]
//! space    := "R" | "S" | "H"
//! interval := "[" number "," number "]"
//! expr     := term { ("+"|"-") term }
//! term     := factor { ("*"|"/") factor }
//! factor   := number | ident | func "(" expr ")" | "(" expr ")" | "-" factor | factor "^" number
//! func     := "sin" | "cos" | "sinh" | "cosh" | "exp" | "sqrt" | "log"
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::jets::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Sqrt,
    Log,
}

impl Func {
    pub const ALL: [Func; 7] =
        [Func::Sin, Func::Cos, Func::Sinh, Func::Cosh, Func::Exp, Func::Sqrt, Func::Log];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply_f64(self, x: f64) -> Result<f64> {
        Ok(match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Exp => x.exp(),
            Func::Sqrt if x >= 0.0 => x.sqrt(),
            Func::Log if x > 0.0 => x.ln(),
            Func::Sqrt | Func::Log => {
                return Err(Error::Domain(format!("{}({x}) is undefined", self.name())))
            }
        })
    }

    pub fn apply_jet(self, x: &Jet) -> Result<Jet> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Sinh => Ok(x.sinh()),
            Func::Cosh => Ok(x.cosh()),
            Func::Exp => Ok(x.exp()),
            Func::Sqrt => x.sqrt(),
            Func::Log => x.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Index into the parameter list.
    Param(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(x: f64) -> Self {
        Expr::Num(x)
    }

    pub fn neg(e: Expr) -> Self {
        match e {
            Expr::Num(x) => Expr::Num(-x),
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Self {
        Expr::Call(f, Box::new(a))
    }

    /// `sum_k coeffs[k] * terms[k]`, skipping zero coefficients.
    pub fn linear_combination(coeffs: &[f64], terms: &[Expr]) -> Self {
        let mut acc: Option<Expr> = None;
        for (c, t) in coeffs.iter().zip(terms) {
            if *c == 0.0 {
                continue;
            }
            let term = if *c == 1.0 {
                t.clone()
            } else {
                Expr::bin(BinOp::Mul, Expr::Num(*c), t.clone())
            };
            acc = Some(match acc {
                None => term,
                Some(a) => Expr::bin(BinOp::Add, a, term),
            });
        }
        acc.unwrap_or(Expr::Num(0.0))
    }

    pub fn eval_f64(&self, params: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Num(x) => *x,
            Expr::Param(i) => params[*i],
            Expr::Neg(e) => -e.eval_f64(params)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval_f64(params)?, b.eval_f64(params)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b != 0.0 => a / b,
                    BinOp::Div => return Err(Error::Domain("division by zero".into())),
                }
            }
            Expr::Pow(e, p) => {
                let x = e.eval_f64(params)?;
                if x < 0.0 && p.fract() != 0.0 {
                    return Err(Error::Domain(format!("{x}^{p} is undefined")));
                }
                x.powf(*p)
            }
            Expr::Call(f, e) => f.apply_f64(e.eval_f64(params)?)?,
        })
    }

    pub fn eval_jet(&self, params: &[Jet]) -> Result<Jet> {
        let nvars = params.first().map_or(0, Jet::nvars);
        Ok(match self {
            Expr::Num(x) => Jet::constant(*x, nvars),
            Expr::Param(i) => params[*i].clone(),
            Expr::Neg(e) => -e.eval_jet(params)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval_jet(params)?, b.eval_jet(params)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.try_div(&b).map_err(|e| match e {
                        Error::DivisionByZeroJet => Error::Domain("division by zero".into()),
                        other => other,
                    })?,
                }
            }
            Expr::Pow(e, p) => e.eval_jet(params)?.powf(*p)?,
            Expr::Call(f, e) => f.apply_jet(&e.eval_jet(params)?)?,
        })
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }

    /// Replaces every parameter by the corresponding expression.
    pub fn substitute(&self, replacements: &[Expr]) -> Expr {
        match self {
            Expr::Num(x) => Expr::Num(*x),
            Expr::Param(i) => replacements[*i].clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(replacements))),
            Expr::Bin(op, a, b) => {
                Expr::bin(*op, a.substitute(replacements), b.substitute(replacements))
            }
            Expr::Pow(e, p) => Expr::Pow(Box::new(e.substitute(replacements)), *p),
            Expr::Call(f, e) => Expr::call(*f, e.substitute(replacements)),
        }
    }
}

/// Prints an expression with enough parentheses to re-parse to the same tree.
pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

fn write_number(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x < 0.0 || (x == 0.0 && x.is_sign_negative()) {
        write!(f, "(-{:?})", -x)
    } else {
        write!(f, "{x:?}")
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.names;
        match self.expr {
            Expr::Num(x) => write_number(f, *x),
            Expr::Param(i) => write!(f, "{}", names[*i]),
            Expr::Neg(e) => write!(f, "-({})", e.display(names)),
            Expr::Bin(op, a, b) => {
                write!(f, "({} {} {})", a.display(names), op.symbol(), b.display(names))
            }
            Expr::Pow(e, p) => write!(f, "({})^{p:?}", e.display(names)),
            Expr::Call(func, e) => write!(f, "{}({})", func.name(), e.display(names)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(x) => write!(f, "number {x}"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, column);
        let mut push = |tok: Tok| tokens.push(Token { tok, line: start_line, column: start_col });
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let value = s.parse::<f64>().map_err(|_| Error::Syntax {
                line,
                column,
                message: format!("malformed number `{s}`"),
            })?;
            push(Tok::Number(value));
            column += i - start;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            push(Tok::Ident(chars[start..i].iter().collect()));
            column += i - start;
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '-' if chars.get(i + 1) == Some(&'>') => {
                push(Tok::Arrow);
                i += 2;
                column += 2;
                continue;
            }
            '-' => Tok::Minus,
            other => {
                return Err(Error::Syntax {
                    line,
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        push(tok);
        i += 1;
        column += 1;
    }
    tokens.push(Token { tok: Tok::Eof, line, column });
    Ok(tokens)
}

pub(crate) struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: &'a [String],
}

impl<'a> Parser<'a> {
    pub fn new(tokens: Vec<Token>, params: &'a [String]) -> Self {
        Self { tokens, pos: 0, params }
    }

    pub fn set_params(&mut self, params: &'a [String]) {
        self.params = params;
    }

    pub fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    pub fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error_here(&self, message: impl Into<String>) -> Error {
        let t = &self.tokens[self.pos];
        Error::Syntax { line: t.line, column: t.column, message: message.into() }
    }

    pub fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {tok}, found {}", self.peek())))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            other => Err(self.error_here(format!("expected `{kw}`, found {other}"))),
        }
    }

    pub fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => Err(self.error_here(format!("expected identifier, found {other}"))),
        }
    }

    pub fn signed_number(&mut self) -> Result<f64> {
        let negative = if *self.peek() == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Number(x) => {
                self.next();
                Ok(if negative { -x } else { x })
            }
            other => Err(self.error_here(format!("expected number, found {other}"))),
        }
    }

    pub fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.factor()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let mut base = self.atom()?;
        while *self.peek() == Tok::Caret {
            self.next();
            let p = self.signed_number()?;
            base = Expr::Pow(Box::new(base), p);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Number(x) => {
                self.next();
                Ok(Expr::Num(x))
            }
            Tok::Minus => {
                self.next();
                Ok(Expr::neg(self.factor()?))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.next();
                if *self.peek() == Tok::LParen {
                    let func =
                        Func::from_name(&name).ok_or_else(|| Error::UnknownFunction(name.clone()))?;
                    self.next();
                    let arg = self.expr()?;
                    if *self.peek() == Tok::Comma {
                        return Err(Error::Arity(format!("`{name}` takes exactly one argument")));
                    }
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::call(func, arg));
                }
                match self.params.iter().position(|p| *p == name) {
                    Some(i) => Ok(Expr::Param(i)),
                    None => Err(Error::UnknownIdentifier(name)),
                }
            }
            other => Err(self.error_here(format!("unexpected {other}"))),
        }
    }
}

/// Parses a single expression over the given parameter names.
pub fn parse_expr(text: &str, params: &[String]) -> Result<Expr> {
    let mut p = Parser::new(tokenize(text)?, params);
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("trailing {}", p.peek())));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precedence_and_unary_minus() {
        let p = names(&["u", "v"]);
        let e = parse_expr("-u^2 + 2*v/4 - 1", &p).unwrap();
        assert_eq!(e.eval_f64(&[3.0, 2.0]).unwrap(), -9.0 + 1.0 - 1.0);
        let e = parse_expr("cosh(u)^2 - sinh(u)^2", &p).unwrap();
        assert!((e.eval_f64(&[0.7, 0.0]).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(parse_expr("2e-1 * u", &p).unwrap().eval_f64(&[5.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        let p = names(&["u"]);
        assert_eq!(parse_expr("w + 1", &p), Err(Error::UnknownIdentifier("w".into())));
        assert_eq!(parse_expr("tan(u)", &p), Err(Error::UnknownFunction("tan".into())));
        assert!(matches!(parse_expr("sin(u, u)", &p), Err(Error::Arity(_))));
        assert!(matches!(
            parse_expr("(u + 1", &p),
            Err(Error::Syntax { line: 1, column: 7, .. })
        ));
        assert!(matches!(parse_expr("u $ 1", &p), Err(Error::Syntax { column: 3, .. })));
    }

    #[test]
    fn printing_reparses_to_same_tree() {
        let p = names(&["u", "v"]);
        for text in [
            "-u^2 + 2*v/4 - 1",
            "sqrt(1 + u*u) * exp(-v)",
            "(-0.5) * u ^ -2",
            "log(2 + cos(u)) - -v",
        ] {
            let e = parse_expr(text, &p).unwrap();
            let printed = e.display(&p).to_string();
            assert_eq!(parse_expr(&printed, &p).unwrap(), e, "{printed}");
        }
    }

    #[test]
    fn jet_and_scalar_evaluation_agree() {
        let p = names(&["u", "v"]);
        let e = parse_expr("sin(u) * cosh(v) + sqrt(2 + u*v) / (3 - v)", &p).unwrap();
        let pt = [0.3, -0.4];
        let jets = Jet::variables(&pt).unwrap();
        let j = e.eval_jet(&jets).unwrap();
        assert!((j.value() - e.eval_f64(&pt).unwrap()).abs() < 1e-15);
    }
}
