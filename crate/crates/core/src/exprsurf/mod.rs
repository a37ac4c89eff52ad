//! Implicit surfaces given as text, e.g. `"(x-z^2)^2+y^2+z^2-1"`.
//!
//! Expressions are parsed by recursive descent and evaluated either on
//! plain `f64` or on [`HyperDual`] numbers, which yields the value, gradient
//! and Hessian in a single pass.
//!
//! Precedence, from tightest: `^` (right associative, constant non-negative
//! integer exponents only), unary minus, `* /`, `+ -`. Functions: `sqrt`,
//! `sin`, `cos`, `exp`, `log`.

mod hyperdual;

pub use hyperdual::HyperDual;

use crate::error::{HosqError, Result};
use crate::Point3;
use nalgebra::Matrix3;
use std::fmt;

/// Maximum accepted expression length in bytes.
pub const MAX_INPUT_LEN: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

/// Parsed expression tree in the variables `x`, `y`, `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Coordinate index: 0 = x, 1 = y, 2 = z.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

/// Scalars the evaluator can run on.
trait Scalar: Copy {
    fn constant(c: f64) -> Self;
    fn var(axis: usize, p: &Point3) -> Self;
    fn value(&self) -> f64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn powi(self, k: u32) -> Self;
    fn apply(self, f: Func) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn var(axis: usize, p: &Point3) -> Self {
        p[axis]
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn neg(self) -> Self {
        -self
    }
    fn powi(self, k: u32) -> Self {
        (0..k).fold(1.0, |acc, _| acc * self)
    }
    fn apply(self, f: Func) -> Self {
        match f {
            Func::Sqrt => self.sqrt(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
        }
    }
}

impl Scalar for HyperDual {
    fn constant(c: f64) -> Self {
        HyperDual::constant(c)
    }
    fn var(axis: usize, p: &Point3) -> Self {
        HyperDual::variable(axis, p[axis])
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn neg(self) -> Self {
        -self
    }
    fn powi(self, k: u32) -> Self {
        HyperDual::powi(self, k)
    }
    fn apply(self, f: Func) -> Self {
        match f {
            Func::Sqrt => self.sqrt(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
        }
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        parse(text)
    }

    fn eval_generic<S: Scalar>(&self, p: &Point3) -> Result<S> {
        Ok(match self {
            Expr::Num(c) => S::constant(*c),
            Expr::Var(axis) => S::var(*axis, p),
            Expr::Neg(a) => a.eval_generic::<S>(p)?.neg(),
            Expr::Pow(a, k) => a.eval_generic::<S>(p)?.powi(*k),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval_generic::<S>(p)?, b.eval_generic::<S>(p)?);
                match op {
                    BinOp::Add => a.add(b),
                    BinOp::Sub => a.sub(b),
                    BinOp::Mul => a.mul(b),
                    BinOp::Div => {
                        if b.value() == 0.0 {
                            return Err(HosqError::Eval(format!("division by zero at {p:?}")));
                        }
                        a.div(b)
                    }
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval_generic::<S>(p)?;
                let bad = match f {
                    Func::Sqrt => a.value() < 0.0,
                    Func::Log => a.value() <= 0.0,
                    _ => false,
                };
                if bad {
                    return Err(HosqError::Eval(format!(
                        "{} of {} at {p:?}",
                        f.name(),
                        a.value()
                    )));
                }
                a.apply(*f)
            }
        })
    }

    /// Plain value at `p`.
    pub fn eval(&self, p: &Point3) -> Result<f64> {
        self.eval_generic::<f64>(p)
    }

    /// Value, gradient and Hessian at `p`.
    pub fn eval_hyperdual(&self, p: &Point3) -> Result<(f64, Point3, Matrix3<f64>)> {
        let h: HyperDual = self.eval_generic(p)?;
        if !h.value.is_finite() || h.grad.iter().chain(&h.hess).any(|v| !v.is_finite()) {
            return Err(HosqError::Eval(format!("non-finite derivative at {p:?}")));
        }
        let grad = Point3::new(h.grad[0], h.grad[1], h.grad[2]);
        let hess = Matrix3::from_fn(|i, j| h.hessian(i, j));
        Ok((h.value, grad, hess))
    }

    /// Whether the expression mentions no variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

/// Free-function form of [`Expr::eval_hyperdual`].
pub fn eval_hyperdual(ast: &Expr, p: &Point3) -> Result<(f64, Point3, Matrix3<f64>)> {
    ast.eval_hyperdual(p)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::Var(a) => f.write_str(["x", "y", "z"][*a]),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pow(a, k) => write!(f, "({a})^{k}"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = HosqError;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

/// Parses an expression in `x`, `y`, `z`.
pub fn parse(text: &str) -> Result<Expr> {
    if text.len() > MAX_INPUT_LEN {
        return Err(HosqError::Parse { offset: MAX_INPUT_LEN, message: "input exceeds 64 KiB".into() });
    }
    if let Some(pos) = text.bytes().position(|b| !b.is_ascii()) {
        return Err(HosqError::Parse { offset: pos, message: "non-ASCII character".into() });
    }
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("expected operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> HosqError {
        let found = match self.src.get(self.pos) {
            Some(&c) => format!("'{}'", c as char),
            None => "end of input".to_string(),
        };
        HosqError::Parse { offset: self.pos, message: format!("{msg}, found {found}") }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let at = self.pos;
        let exponent = self.power()?;
        let bad = || HosqError::Parse { offset: at, message: "expected non-negative integer exponent".into() };
        if !exponent.is_constant() {
            return Err(bad());
        }
        let k = exponent.eval(&Point3::zeros()).map_err(|_| bad())?;
        if k < 0.0 || k.fract() != 0.0 || k > u32::MAX as f64 {
            return Err(bad());
        }
        Ok(Expr::Pow(Box::new(base), k as u32))
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.src.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                match name {
                    "x" => Ok(Expr::Var(0)),
                    "y" => Ok(Expr::Var(1)),
                    "z" => Ok(Expr::Var(2)),
                    _ => {
                        let Some(func) = Func::from_name(name) else {
                            return Err(HosqError::Parse {
                                offset: start,
                                message: format!("unknown identifier '{name}'"),
                            });
                        };
                        if !self.eat(b'(') {
                            return Err(self.error("expected '(' after function name"));
                        }
                        let arg = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                }
            }
            _ => Err(self.error("expected number, variable, function or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.src.get(p.pos).is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        s.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| HosqError::Parse { offset: start, message: format!("malformed number '{s}'") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const DZIUK: &str = "(x-z^2)^2+y^2+z^2-1";

    fn pt(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    #[test]
    fn parses_surface_expressions() {
        let e = parse(DZIUK).unwrap();
        let p = pt(0.3, -0.2, 0.7);
        let expected = (0.3 - 0.49f64).powi(2) + 0.04 + 0.49 - 1.0;
        assert!((e.eval(&p).unwrap() - expected).abs() < 1e-15);
        assert!(parse("((x^2+y^2)^2-x^2+y^2)^2+z^2-0.04").is_ok());
    }

    #[test]
    fn parse_error_offsets() {
        match parse("x+") {
            Err(HosqError::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        match parse("x*(y+1") {
            Err(HosqError::Parse { offset, message }) => {
                assert_eq!(offset, 6);
                assert!(message.contains("')'"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("w+1"), Err(HosqError::Parse { offset: 0, .. })));
        assert!(matches!(parse("x^y"), Err(HosqError::Parse { offset: 2, .. })));
        assert!(matches!(parse("x^-1"), Err(HosqError::Parse { .. })));
        assert!(matches!(parse("x^1.5"), Err(HosqError::Parse { .. })));
        assert!(matches!(parse("x 1"), Err(HosqError::Parse { offset: 2, .. })));
        assert!(matches!(parse("abs(x)"), Err(HosqError::Parse { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let p = pt(2.0, 3.0, 0.0);
        let v = |s: &str| parse(s).unwrap().eval(&p).unwrap();
        assert_eq!(v("-x^2"), -4.0);
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("x-y-1"), -2.0);
        assert_eq!(v("x/y*3"), 2.0);
        assert_eq!(v("1+x*y"), 7.0);
        assert_eq!(v(" ( x + y ) * 2 "), 10.0);
        assert_eq!(v("1.5e1+.5"), 15.5);
        assert_eq!(v("x^0"), 1.0);
    }

    #[test]
    fn hyperdual_evaluation() {
        let (v, g, h) = parse("x*y+z").unwrap().eval_hyperdual(&pt(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(v, 5.0);
        assert_eq!(g, pt(2.0, 1.0, 1.0));
        let mut expected = Matrix3::zeros();
        expected[(0, 1)] = 1.0;
        expected[(1, 0)] = 1.0;
        assert_eq!(h, expected);

        let (v, g, _) = parse(DZIUK).unwrap().eval_hyperdual(&pt(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, pt(2.0, 0.0, 0.0));

        let (v, _, h) = parse("x^2").unwrap().eval_hyperdual(&pt(3.0, 0.0, 0.0)).unwrap();
        assert_eq!(v, 9.0);
        assert_eq!(h[(0, 0)], 2.0);
    }

    #[test]
    fn evaluation_errors_name_the_operation() {
        let origin = Point3::zeros();
        match parse("1/x").unwrap().eval_hyperdual(&origin) {
            Err(HosqError::Eval(m)) => assert!(m.contains("division")),
            other => panic!("{other:?}"),
        }
        match parse("sqrt(x-1)").unwrap().eval(&origin) {
            Err(HosqError::Eval(m)) => assert!(m.contains("sqrt")),
            other => panic!("{other:?}"),
        }
        match parse("log(x)").unwrap().eval(&origin) {
            Err(HosqError::Eval(m)) => assert!(m.contains("log")),
            other => panic!("{other:?}"),
        }
        // derivative of sqrt blows up at zero
        assert!(parse("sqrt(x)").unwrap().eval_hyperdual(&origin).is_err());
    }

    #[test]
    fn rejects_oversized_and_non_ascii_input() {
        let long = "x+".repeat(MAX_INPUT_LEN / 2) + "x";
        assert!(matches!(parse(&long), Err(HosqError::Parse { .. })));
        assert!(matches!(parse("x+\u{00e9}"), Err(HosqError::Parse { offset: 2, .. })));
    }

    /// Random polynomial in x, y, z with small integer coefficients.
    fn random_poly(rng: &mut impl Rng) -> String {
        let terms = rng.gen_range(2..6);
        (0..terms)
            .map(|_| {
                let c = rng.gen_range(-3..=3);
                let (a, b, d) = (rng.gen_range(0..4), rng.gen_range(0..4), rng.gen_range(0..3));
                format!("{c}*x^{a}*y^{b}*z^{d}")
            })
            .collect::<Vec<_>>()
            .join("+")
            .replace("+-", "-")
            + "+sin(x*y)-exp(z/2)"
    }

    #[test]
    fn derivatives_match_central_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..10 {
            let src = random_poly(&mut rng);
            let e = parse(&src).unwrap();
            for _ in 0..100 {
                let p = pt(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let (_, g, hess) = e.eval_hyperdual(&p).unwrap();
                for i in 0..3 {
                    let mut dp = Point3::zeros();
                    dp[i] = h;
                    let fd = (e.eval(&(p + dp)).unwrap() - e.eval(&(p - dp)).unwrap()) / (2.0 * h);
                    assert!((g[i] - fd).abs() <= 1e-6 * (1.0 + g[i].abs()), "{src} grad {i}");
                    let (_, gp, _) = e.eval_hyperdual(&(p + dp)).unwrap();
                    let (_, gm, _) = e.eval_hyperdual(&(p - dp)).unwrap();
                    for j in 0..3 {
                        let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                        assert!((hess[(i, j)] - fd2).abs() <= 1e-6 * (1.0 + hess[(i, j)].abs()), "{src} H{i}{j}");
                    }
                }
                assert_eq!(hess, hess.transpose());
            }
        }
    }

    proptest! {
        #[test]
        fn pretty_print_roundtrip(seed in 0u64..10_000, x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let e = parse(&random_poly(&mut rng)).unwrap();
            let again = parse(&e.to_string()).unwrap();
            let p = pt(x, y, z);
            prop_assert_eq!(e.eval(&p).unwrap(), again.eval(&p).unwrap());
        }
    }
}
