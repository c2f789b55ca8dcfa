use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::chart::SurfaceKind;
use crate::math;

/// Ambient variables. Sphere fields see the unit-sphere coordinates
/// `x, y, z`; torus fields see the four trigonometric coordinates of the
/// two angles, which makes every expression doubly periodic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Z,
    CosU,
    SinU,
    CosV,
    SinV,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::CosU => "cos_u",
            Var::SinU => "sin_u",
            Var::CosV => "cos_v",
            Var::SinV => "sin_v",
        }
    }

    pub fn surface(self) -> SurfaceKind {
        match self {
            Var::X | Var::Y | Var::Z => SurfaceKind::Sphere,
            _ => SurfaceKind::Torus,
        }
    }

    /// Slot in the ambient coordinate array of the owning surface.
    pub(crate) fn slot(self) -> usize {
        match self {
            Var::X | Var::CosU => 0,
            Var::Y | Var::SinU => 1,
            Var::Z | Var::CosV => 2,
            Var::SinV => 3,
        }
    }

    pub fn lookup(name: &str, surface: SurfaceKind) -> Option<Var> {
        let var = match name {
            "x" => Var::X,
            "y" => Var::Y,
            "z" => Var::Z,
            "cos_u" => Var::CosU,
            "sin_u" => Var::SinU,
            "cos_v" => Var::CosV,
            "sin_v" => Var::SinV,
            _ => return None,
        };
        (var.surface() == surface).then_some(var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }

    pub fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree of a scalar field.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Func(Func, Box<Expr>),
}

// Smart constructors folding constants and the usual identities.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(0.0), _) => Expr::neg(b),
            (_, Some(0.0)) => a,
            _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(0.0), _) | (_, Some(0.0)) => Expr::Const(0.0),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(0.0), _) => Expr::Const(0.0),
            (_, Some(1.0)) => a,
            _ => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(a: Expr, n: u32) -> Expr {
        match (n, a.as_const()) {
            (0, _) => Expr::Const(1.0),
            (1, _) => a,
            (_, Some(c)) => Expr::Const(math::powi(c, n)),
            _ => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        Expr::Func(f, Box::new(a))
    }

    /// Symbolic partial derivative with respect to an ambient variable.
    pub fn derivative(&self, wrt: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == wrt { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.derivative(wrt)),
            Expr::Bin(op, a, b) => {
                let (da, db) = (a.derivative(wrt), b.derivative(wrt));
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(
                        Expr::mul(da, (**b).clone()),
                        Expr::mul((**a).clone(), db),
                    ),
                    BinOp::Div => {
                        // (a'b - ab') / b^2
                        let num = Expr::sub(
                            Expr::mul(da, (**b).clone()),
                            Expr::mul((**a).clone(), db),
                        );
                        Expr::div(num, Expr::pow((**b).clone(), 2))
                    }
                }
            }
            Expr::Pow(_, 0) => Expr::Const(0.0),
            Expr::Pow(a, n) => {
                let da = a.derivative(wrt);
                let outer = Expr::mul(Expr::Const(f64::from(*n)), Expr::pow((**a).clone(), n - 1));
                Expr::mul(outer, da)
            }
            Expr::Func(f, a) => {
                let da = a.derivative(wrt);
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::func(Func::Cos, inner),
                    Func::Cos => Expr::neg(Expr::func(Func::Sin, inner)),
                    Func::Exp => Expr::func(Func::Exp, inner),
                    Func::Ln => return Expr::div(da, inner),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Every variable the expression mentions.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Grammar level this node parses at: 0 = expr, 1 = term, 2 = factor, 3 = base.
    fn level(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 0,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 1,
            Expr::Pow(..) => 2,
            _ => 3,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        if self.level() < min_level {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_at(f, 3)
            }
            Expr::Bin(op, a, b) => {
                let (sym, lhs, rhs) = match op {
                    BinOp::Add => (" + ", 0, 1),
                    BinOp::Sub => (" - ", 0, 1),
                    BinOp::Mul => ("*", 1, 2),
                    BinOp::Div => ("/", 1, 2),
                };
                a.fmt_at(f, lhs)?;
                f.write_str(sym)?;
                b.fmt_at(f, rhs)
            }
            Expr::Pow(a, n) => {
                a.fmt_at(f, 3)?;
                write!(f, "^{n}")
            }
            Expr::Func(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

/// Prints in the input grammar; parsing the output yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(u8),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(u32),
    Sin,
    Cos,
    Exp,
    Ln,
}

const INLINE_STACK: usize = 48;

/// Postfix form of an [`Expr`] for fast repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Program {
    ops: Vec<Op>,
    depth: usize,
}

impl Program {
    pub(crate) fn compile(expr: &Expr) -> Program {
        let mut ops = Vec::new();
        let depth = emit(expr, &mut ops);
        Program { ops, depth }
    }

    /// Evaluates against ambient coordinates; the error names the failing operation.
    pub(crate) fn eval(&self, ambient: &[f64; 4]) -> Result<f64, &'static str> {
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(ambient, &mut stack)
        } else {
            let mut stack = alloc::vec![0.0f64; self.depth];
            self.run(ambient, &mut stack)
        }
    }

    fn run(&self, ambient: &[f64; 4], stack: &mut [f64]) -> Result<f64, &'static str> {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    stack[sp] = c;
                    sp += 1;
                }
                Op::Var(slot) => {
                    stack[sp] = ambient[slot as usize];
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let b = stack[sp - 1];
                    let a = stack[sp - 2];
                    sp -= 1;
                    stack[sp - 1] = match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        _ => {
                            if b == 0.0 {
                                return Err("division by zero");
                            }
                            a / b
                        }
                    };
                }
                Op::Pow(n) => stack[sp - 1] = math::powi(stack[sp - 1], n),
                Op::Sin => stack[sp - 1] = math::sin(stack[sp - 1]),
                Op::Cos => stack[sp - 1] = math::cos(stack[sp - 1]),
                Op::Exp => stack[sp - 1] = math::exp(stack[sp - 1]),
                Op::Ln => {
                    let a = stack[sp - 1];
                    if a <= 0.0 {
                        return Err("ln of a non-positive argument");
                    }
                    stack[sp - 1] = math::log(a);
                }
            }
        }
        Ok(stack[0])
    }
}

/// Emits postfix ops and returns the stack depth needed.
fn emit(expr: &Expr, ops: &mut Vec<Op>) -> usize {
    match expr {
        Expr::Const(c) => {
            ops.push(Op::Const(*c));
            1
        }
        Expr::Var(v) => {
            ops.push(Op::Var(v.slot() as u8));
            1
        }
        Expr::Neg(a) => {
            let d = emit(a, ops);
            ops.push(Op::Neg);
            d
        }
        Expr::Pow(a, n) => {
            let d = emit(a, ops);
            ops.push(Op::Pow(*n));
            d
        }
        Expr::Func(f, a) => {
            let d = emit(a, ops);
            ops.push(match f {
                Func::Sin => Op::Sin,
                Func::Cos => Op::Cos,
                Func::Exp => Op::Exp,
                Func::Ln => Op::Ln,
            });
            d
        }
        Expr::Bin(op, a, b) => {
            let da = emit(a, ops);
            let db = emit(b, ops);
            ops.push(match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
            });
            da.max(db + 1)
        }
    }
}
