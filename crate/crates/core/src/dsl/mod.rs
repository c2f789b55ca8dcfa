//! Scalar-field expression language.
//!
//! A field `f` defines the bivector `π = f·π₀`. Expressions are written in
//! ambient variables (`x, y, z` on the unit sphere; `cos_u, sin_u, cos_v,
//! sin_v` on the torus) so every field is smooth across the poles and doubly
//! periodic by construction. Chart partials are derived symbolically.

mod expr;
mod parser;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;

pub use expr::{BinOp, Expr, Func, Var};
pub(crate) use expr::Program;

use crate::chart::{ChartPoint, SurfaceKind};
use crate::math;
use crate::Error;

/// Anything that can be sampled as `f` in `π = f·π₀`.
pub trait Field: Send + Sync {
    fn surface(&self) -> SurfaceKind;

    /// `f` at a chart point.
    fn eval(&self, p: ChartPoint) -> Result<f64, Error>;

    /// Chart partials `(∂f/∂z, ∂f/∂θ)` or `(∂f/∂u, ∂f/∂v)`.
    fn partials(&self, p: ChartPoint) -> Result<(f64, f64), Error>;

    /// Human-readable form used in reports.
    fn describe(&self) -> String;
}

impl<F: Field + ?Sized> Field for &F {
    fn surface(&self) -> SurfaceKind {
        (**self).surface()
    }
    fn eval(&self, p: ChartPoint) -> Result<f64, Error> {
        (**self).eval(p)
    }
    fn partials(&self, p: ChartPoint) -> Result<(f64, f64), Error> {
        (**self).partials(p)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<F: Field + ?Sized> Field for Box<F> {
    fn surface(&self) -> SurfaceKind {
        (**self).surface()
    }
    fn eval(&self, p: ChartPoint) -> Result<f64, Error> {
        (**self).eval(p)
    }
    fn partials(&self, p: ChartPoint) -> Result<(f64, f64), Error> {
        (**self).partials(p)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<F: Field + ?Sized> Field for Arc<F> {
    fn surface(&self) -> SurfaceKind {
        (**self).surface()
    }
    fn eval(&self, p: ChartPoint) -> Result<f64, Error> {
        (**self).eval(p)
    }
    fn partials(&self, p: ChartPoint) -> Result<(f64, f64), Error> {
        (**self).partials(p)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// A parsed field together with its symbolic chart partials.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    surface: SurfaceKind,
    expr: Expr,
    d1: Expr,
    d2: Expr,
    value_prog: Program,
    d1_prog: Program,
    d2_prog: Program,
}

pub fn parse_field(text: &str, surface: SurfaceKind) -> Result<ScalarField, Error> {
    let expr = parser::parse_expr(text, surface)?;
    ScalarField::new(expr, surface)
}

impl ScalarField {
    /// Builds a field from a tree; fails if a variable belongs to the other surface.
    pub fn new(expr: Expr, surface: SurfaceKind) -> Result<Self, Error> {
        if let Some(v) = expr.variables().into_iter().find(|v| v.surface() != surface) {
            return Err(Error::UnknownVariable(v.name().to_string()));
        }
        let (d1, d2) = chart_partials(&expr, surface);
        Ok(ScalarField {
            surface,
            value_prog: Program::compile(&expr),
            d1_prog: Program::compile(&d1),
            d2_prog: Program::compile(&d2),
            expr,
            d1,
            d2,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Symbolic chart partials in ambient variables.
    pub fn partial_exprs(&self) -> (&Expr, &Expr) {
        (&self.d1, &self.d2)
    }

    pub fn eval_chart(&self, p: ChartPoint) -> Result<f64, Error> {
        let amb = ambient(self.surface, p);
        self.value_prog.eval(&amb).map_err(|what| domain(what, p))
    }

    pub fn partials_chart(&self, p: ChartPoint) -> Result<(f64, f64), Error> {
        let amb = ambient(self.surface, p);
        let a = self.d1_prog.eval(&amb).map_err(|what| domain(what, p))?;
        let b = self.d2_prog.eval(&amb).map_err(|what| domain(what, p))?;
        Ok((a, b))
    }

    /// `λ·f`.
    pub fn scaled(&self, lambda: f64) -> ScalarField {
        let e = Expr::mul(Expr::Const(lambda), self.expr.clone());
        ScalarField::new(e, self.surface).expect("same variables")
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> ScalarField {
        let e = Expr::add(self.expr.clone(), Expr::Const(c));
        ScalarField::new(e, self.surface).expect("same variables")
    }
}

impl Field for ScalarField {
    fn surface(&self) -> SurfaceKind {
        self.surface
    }
    fn eval(&self, p: ChartPoint) -> Result<f64, Error> {
        self.eval_chart(p)
    }
    fn partials(&self, p: ChartPoint) -> Result<(f64, f64), Error> {
        self.partials_chart(p)
    }
    fn describe(&self) -> String {
        self.expr.to_string()
    }
}

fn domain(what: &'static str, p: ChartPoint) -> Error {
    Error::Domain {
        what,
        s: p.s,
        t: p.t,
    }
}

/// Ambient coordinates of a chart point, in [`Var`] slot order.
fn ambient(surface: SurfaceKind, p: ChartPoint) -> [f64; 4] {
    match surface {
        SurfaceKind::Sphere => {
            let z = p.s;
            let r = math::sqrt((1.0 - z * z).max(0.0));
            [r * math::cos(p.t), r * math::sin(p.t), z, 0.0]
        }
        SurfaceKind::Torus => [
            math::cos(p.s),
            math::sin(p.s),
            math::cos(p.t),
            math::sin(p.t),
        ],
    }
}

/// Chain rule through the chart substitution.
///
/// Sphere, with `x = √(1-z²)cos θ`, `y = √(1-z²)sin θ`:
/// `∂f/∂θ = x·f_y - y·f_x`, `∂f/∂z = f_z - z·(x·f_x + y·f_y)/(1 - z²)`.
/// Torus: `∂f/∂u = cos_u·f_{sin_u} - sin_u·f_{cos_u}`, likewise for `v`.
fn chart_partials(e: &Expr, surface: SurfaceKind) -> (Expr, Expr) {
    let v = Expr::var;
    match surface {
        SurfaceKind::Sphere => {
            let fx = e.derivative(Var::X);
            let fy = e.derivative(Var::Y);
            let fz = e.derivative(Var::Z);
            let d_theta = Expr::sub(
                Expr::mul(v(Var::X), fy.clone()),
                Expr::mul(v(Var::Y), fx.clone()),
            );
            let radial = Expr::add(Expr::mul(v(Var::X), fx), Expr::mul(v(Var::Y), fy));
            let d_z = if radial == Expr::Const(0.0) {
                fz
            } else {
                let rho2 = Expr::sub(Expr::Const(1.0), Expr::pow(v(Var::Z), 2));
                Expr::sub(fz, Expr::div(Expr::mul(v(Var::Z), radial), rho2))
            };
            (d_z, d_theta)
        }
        SurfaceKind::Torus => {
            let along = |c: Var, s: Var| {
                Expr::sub(
                    Expr::mul(v(c), e.derivative(s)),
                    Expr::mul(v(s), e.derivative(c)),
                )
            };
            (along(Var::CosU, Var::SinU), along(Var::CosV, Var::SinV))
        }
    }
}
