//! Arithmetic expressions over `x`, `y` or `t`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('+' | '-') unary | power
//! power   := atom ('^' unary)?
//! atom    := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Names are the variables `x`, `y`, `t`, the constants `pi` and `e`, and
//! the functions `sin`, `cos`, `exp`, `log`, `abs`. Evaluation follows IEEE
//! arithmetic, so `1/t` at `t = 0` is `inf` and `1/log(e + 1/t)` is `0`.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    T,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
}

impl Node {
    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(Var::X) => x,
            Node::Var(Var::Y) => y,
            Node::Var(Var::T) => t,
            Node::Neg(a) => -a.eval(x, y, t),
            Node::Call(f, a) => {
                let a = a.eval(x, y, t);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Abs => a.abs(),
                }
            }
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y, t), b.eval(x, y, t));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Node::Num(_) => {}
            Node::Var(v) => {
                out.insert(*v);
            }
            Node::Neg(a) | Node::Call(_, a) => a.collect_vars(out),
            Node::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// Parse failure at a 1-based character column of the expression.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

/// A parsed expression that remembers its source text.
#[derive(Clone, Debug)]
pub struct Expression {
    source: String,
    root: Node,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self, ExprError> {
        let chars: Vec<char> = source.chars().collect();
        let mut p = Parser { chars: &chars, pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < chars.len() {
            return Err(p.error(format!("unexpected {:?}", chars[p.pos])));
        }
        Ok(Self {
            source: source.trim().to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        self.root.eval(x, y, t)
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.root.collect_vars(&mut out);
        out
    }

    /// Column of the first use of `v` in the source, if any.
    pub fn column_of(&self, v: Var) -> Option<usize> {
        let name = v.to_string();
        let chars: Vec<char> = self.source.chars().collect();
        (0..chars.len()).find(|&i| {
            chars[i].to_string() == name
                && (i == 0 || !chars[i - 1].is_ascii_alphanumeric())
                && chars.get(i + 1).map_or(true, |c| !c.is_ascii_alphanumeric())
        })
        .map(|i| i + 1)
    }
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: String) -> ExprError {
        ExprError {
            column: self.pos + 1,
            message,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                // the typographic minus is accepted too
                Some('-') | Some('−') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some('-') | Some('−') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of expression".into()));
        };
        if c == '(' {
            self.pos += 1;
            let inner = self.expr()?;
            if self.peek() != Some(')') {
                return Err(self.error("expected ')'".into()));
            }
            self.pos += 1;
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.chars.len() && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_') {
                self.pos += 1;
            }
            let name: String = self.chars[start..self.pos].iter().collect();
            let func = match name.as_str() {
                "x" => return Ok(Node::Var(Var::X)),
                "y" => return Ok(Node::Var(Var::Y)),
                "t" => return Ok(Node::Var(Var::T)),
                "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                "e" => return Ok(Node::Num(std::f64::consts::E)),
                "sin" => Func::Sin,
                "cos" => Func::Cos,
                "exp" => Func::Exp,
                "log" => Func::Log,
                "abs" => Func::Abs,
                _ => {
                    return Err(ExprError {
                        column: start + 1,
                        message: format!("unknown name {name:?}"),
                    })
                }
            };
            if self.peek() != Some('(') {
                return Err(self.error(format!("expected '(' after {name}")));
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(')') {
                return Err(self.error("expected ')'".into()));
            }
            self.pos += 1;
            return Ok(Node::Call(func, Box::new(arg)));
        }
        Err(self.error(format!("unexpected {c:?}")))
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.chars.len() && p.chars[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+') | Some('-')) {
                self.pos += 1;
            }
            if self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                digits(self);
            } else {
                // `2e` is not an exponent; leave `e` for the caller
                self.pos = mark;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>().map(Node::Num).map_err(|_| ExprError {
            column: start + 1,
            message: format!("malformed number {text:?}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: f64, t: f64) -> f64 {
        Expression::parse(s).unwrap().eval(x, 0.0, t)
    }

    #[test]
    fn precedence_and_functions() {
        assert_eq!(ev("1 + 2*3", 0.0, 0.0), 7.0);
        assert_eq!(ev("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("8/2/2", 0.0, 0.0), 2.0);
        assert_eq!(ev("abs(x) − 1", -3.0, 0.0), 2.0);
        assert!((ev("0.5 + 0.3*sin(2*pi*x/16)", 4.0, 0.0) - 0.8).abs() < 1e-15);
        assert!((ev("exp(log(3))", 0.0, 0.0) - 3.0).abs() < 1e-15);
        assert_eq!(ev("1.5e2 + 2e-1", 0.0, 0.0), 150.2);
        // q(0) through IEEE limits
        assert_eq!(ev("2 + 1/log(e + 1/t)", 0.0, 0.0), 2.0);
    }

    #[test]
    fn errors_carry_columns() {
        let e = Expression::parse("1 + foo(x)").unwrap_err();
        assert_eq!(e.column, 5);
        let e = Expression::parse("(1 + 2").unwrap_err();
        assert_eq!(e.column, 7);
        let e = Expression::parse("2 $ 3").unwrap_err();
        assert_eq!(e.column, 3);
        let e = Expression::parse("").unwrap_err();
        assert_eq!(e.column, 1);
    }

    #[test]
    fn variables_are_reported() {
        let e = Expression::parse("x + exp(t)").unwrap();
        assert_eq!(e.variables().into_iter().collect::<Vec<_>>(), vec![Var::X, Var::T]);
        assert_eq!(e.column_of(Var::T), Some(9));
        assert_eq!(e.column_of(Var::Y), None);
    }
}
