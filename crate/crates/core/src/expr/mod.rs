//! Symbolic expressions over the jet alphabet of a second-order delay system.
//!
//! An [`Expr`] is an immutable tree. Variables come from the closed alphabet
//! [`Var`] (`x, y, xm, ym, dy, dym, ddy` plus the auxiliary `t, n`); every
//! other identifier is a *parameter*, bound at evaluation time through
//! [`Bindings`]. Delayed quantities carry an `m` suffix, so `xm` is the
//! delayed abscissa and `dym` the derivative at the delayed point.
//!
//! ```
//! use delaysym::expr::{Bindings, Expr, Var};
//!
//! let e: Expr = "x^2 + y".parse().unwrap();
//! let b = Bindings::new().with("x", 2.0).with("y", 1.0);
//! assert_eq!(e.eval(&b).unwrap(), 5.0);
//! assert_eq!(e.diff(Var::X).to_string(), "(2 * x)");
//! ```

mod diff;
mod eval;
mod parse;
mod simplify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

pub use eval::{Bindings, EvalError};
pub use parse::{parse, ParseError, ParseErrorKind};

/// Symbols of the fixed alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Xm,
    Ym,
    Dy,
    Dym,
    Ddy,
    T,
    N,
}

impl Var {
    pub const ALL: [Var; 9] = [
        Var::X,
        Var::Y,
        Var::Xm,
        Var::Ym,
        Var::Dy,
        Var::Dym,
        Var::Ddy,
        Var::T,
        Var::N,
    ];

    /// The seven jet coordinates in the column order of the prolongation
    /// matrix: `x, y, xm, ym, dy, dym, ddy`.
    pub const JET: [Var; 7] = [
        Var::X,
        Var::Y,
        Var::Xm,
        Var::Ym,
        Var::Dy,
        Var::Dym,
        Var::Ddy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Xm => "xm",
            Var::Ym => "ym",
            Var::Dy => "dy",
            Var::Dym => "dym",
            Var::Ddy => "ddy",
            Var::T => "t",
            Var::N => "n",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.iter().copied().find(|v| v.name() == name)
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    /// Counterpart at the delayed point, if this is a base-point coordinate.
    pub fn delayed(self) -> Option<Var> {
        match self {
            Var::X => Some(Var::Xm),
            Var::Y => Some(Var::Ym),
            Var::Dy => Some(Var::Dym),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Supported one-argument functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Arctan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sgn,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Arctan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Sgn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Arctan => "arctan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sgn => "sgn",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Definite integral `∫_anchor^upper integrand(s) ds`, with the integrand
/// written in the dummy variable `x`.
///
/// Only the upper limit takes part in substitution; the integrand keeps its
/// own `x`. Differentiation follows the Leibniz rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    pub integrand: Expr,
    pub upper: Expr,
    pub anchor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Param(Arc<str>),
    Neg(Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
    Quad(Arc<Quadrature>),
}

/// Simultaneous substitution of variables and parameters.
#[derive(Clone, Debug, Default)]
pub struct Subst {
    vars: BTreeMap<Var, Expr>,
    params: BTreeMap<String, Expr>,
}

impl Subst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(mut self, v: Var, e: Expr) -> Self {
        self.vars.insert(v, e);
        self
    }

    pub fn param(mut self, name: &str, e: Expr) -> Self {
        self.params.insert(name.to_string(), e);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.params.is_empty()
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    /// Variable if `name` is in the alphabet, parameter otherwise.
    pub fn symbol(name: &str) -> Expr {
        match Var::from_name(name) {
            Some(v) => Expr::Var(v),
            None => Expr::Param(Arc::from(name)),
        }
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(Arc::from(name))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        match op {
            BinOp::Add => Expr::add(a, b),
            BinOp::Sub => Expr::sub(a, b),
            BinOp::Mul => Expr::mul(a, b),
            BinOp::Div => Expr::div(a, b),
            BinOp::Pow => Expr::pow(a, b),
        }
    }

    fn raw(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Arc::new(a), Arc::new(b))
    }

    // The smart constructors below only apply identities that are exact
    // (neutral elements and folding of finite constants).

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::raw(BinOp::Add, a, b),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::raw(BinOp::Sub, a, b),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::raw(BinOp::Mul, a, b),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(x), _) if x == 0.0 => Expr::Const(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::raw(BinOp::Div, a, b),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => {
                let v = eval::pow_checked(x, y);
                match v {
                    Some(v) => Expr::Const(v),
                    None => Expr::raw(BinOp::Pow, a, b),
                }
            }
            (_, Some(y)) if y == 1.0 => a,
            (_, Some(y)) if y == 0.0 => Expr::Const(1.0),
            (Some(x), _) if x == 1.0 => Expr::Const(1.0),
            _ => Expr::raw(BinOp::Pow, a, b),
        }
    }

    pub fn powi(a: Expr, k: i32) -> Expr {
        Expr::pow(a, Expr::Const(k as f64))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => (*inner).clone(),
            other => Expr::Neg(Arc::new(other)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(c) = a.as_const() {
            if let Some(v) = eval::call_checked(f, c) {
                // Keep transcendental values symbolic unless they are exact.
                if v.fract() == 0.0 {
                    return Expr::Const(v);
                }
            }
        }
        Expr::Call(f, Arc::new(a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::call(Func::Sin, a)
    }
    pub fn cos(a: Expr) -> Expr {
        Expr::call(Func::Cos, a)
    }
    pub fn tan(a: Expr) -> Expr {
        Expr::call(Func::Tan, a)
    }
    pub fn arctan(a: Expr) -> Expr {
        Expr::call(Func::Arctan, a)
    }
    pub fn exp(a: Expr) -> Expr {
        Expr::call(Func::Exp, a)
    }
    pub fn ln(a: Expr) -> Expr {
        Expr::call(Func::Ln, a)
    }
    pub fn sqrt(a: Expr) -> Expr {
        Expr::call(Func::Sqrt, a)
    }
    pub fn abs(a: Expr) -> Expr {
        Expr::call(Func::Abs, a)
    }
    pub fn sgn(a: Expr) -> Expr {
        Expr::call(Func::Sgn, a)
    }

    /// `∫_anchor^upper integrand(s) ds`, integrand in the dummy variable `x`.
    pub fn quad(integrand: Expr, upper: Expr, anchor: f64) -> Expr {
        if let Some(c) = integrand.as_const() {
            return Expr::mul(Expr::Const(c), Expr::sub(upper, Expr::Const(anchor)));
        }
        Expr::Quad(Arc::new(Quadrature {
            integrand,
            upper,
            anchor,
        }))
    }

    /// Whether the expression depends on the variable `v`.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) | Expr::Param(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Binary(_, a, b) => a.depends_on(v) || b.depends_on(v),
            Expr::Quad(q) => q.upper.depends_on(v),
        }
    }

    /// Variables occurring in the expression.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect(&mut out, &mut BTreeSet::new());
        out
    }

    /// Parameter names occurring in the expression.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut BTreeSet::new(), &mut out);
        out
    }

    fn collect(&self, vars: &mut BTreeSet<Var>, params: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                vars.insert(*v);
            }
            Expr::Param(p) => {
                params.insert(p.to_string());
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect(vars, params),
            Expr::Binary(_, a, b) => {
                a.collect(vars, params);
                b.collect(vars, params);
            }
            Expr::Quad(q) => {
                q.upper.collect(vars, params);
                q.integrand.collect(&mut BTreeSet::new(), params);
            }
        }
    }

    /// Number of nodes, used to keep simplification output bounded.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
            Expr::Quad(q) => 1 + q.integrand.size() + q.upper.size(),
        }
    }

    /// Simultaneous substitution.
    pub fn subst(&self, s: &Subst) -> Expr {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => s.vars.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Param(p) => s
                .params
                .get(p.as_ref())
                .cloned()
                .unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::neg(a.subst(s)),
            Expr::Call(f, a) => Expr::call(*f, a.subst(s)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.subst(s), b.subst(s)),
            Expr::Quad(q) => {
                let params_only = Subst {
                    vars: BTreeMap::new(),
                    params: s.params.clone(),
                };
                Expr::quad(q.integrand.subst(&params_only), q.upper.subst(s), q.anchor)
            }
        }
    }

    pub fn subst_var(&self, v: Var, e: &Expr) -> Expr {
        self.subst(&Subst::new().var(v, e.clone()))
    }

    pub fn subst_param(&self, name: &str, e: &Expr) -> Expr {
        self.subst(&Subst::new().param(name, e.clone()))
    }

    /// Moves a base-point expression to the delayed point:
    /// `(x, y, dy) -> (xm, ym, dym)`.
    pub fn delayed(&self) -> Expr {
        self.subst(
            &Subst::new()
                .var(Var::X, Expr::Var(Var::Xm))
                .var(Var::Y, Expr::Var(Var::Ym))
                .var(Var::Dy, Expr::Var(Var::Dym)),
        )
    }

    /// Replaces every parameter bound in `b` by its numeric value.
    pub fn bind_params(&self, b: &Bindings) -> Expr {
        let mut s = Subst::new();
        for name in self.params() {
            if let Ok(v) = b.get(&name) {
                s = s.param(&name, Expr::Const(v));
            }
        }
        self.subst(&s)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Expr {
        Expr::Const(v)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Expr {
        Expr::Var(v)
    }
}

impl FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Expr, ParseError> {
        parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{}", c)
                }
            }
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param(p) => f.write_str(p),
            Expr::Neg(a) => write!(f, "(-{})", a),
            Expr::Binary(op, a, b) => write!(f, "({} {} {})", a, op.symbol(), b),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
            Expr::Quad(q) => write!(f, "quad({}, {}, {})", q.integrand, q.upper, Expr::Const(q.anchor)),
        }
    }
}

macro_rules! impl_op {
    ($trait:ident, $method:ident, $ctor:ident) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self, rhs)
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs.clone())
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self, rhs.clone())
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs)
            }
        }
        impl $trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(self, Expr::Const(rhs))
            }
        }
        impl $trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(self.clone(), Expr::Const(rhs))
            }
        }
        impl $trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(Expr::Const(self), rhs)
            }
        }
        impl $trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(Expr::Const(self), rhs.clone())
            }
        }
    };
}

impl_op!(Add, add, add);
impl_op!(Sub, sub, sub);
impl_op!(Mul, mul, mul);
impl_op!(Div, div, div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}

/// Shorthand for the jet variables, used throughout the crate.
pub mod jet {
    use super::{Expr, Var};

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }
    pub fn y() -> Expr {
        Expr::Var(Var::Y)
    }
    pub fn xm() -> Expr {
        Expr::Var(Var::Xm)
    }
    pub fn ym() -> Expr {
        Expr::Var(Var::Ym)
    }
    pub fn dy() -> Expr {
        Expr::Var(Var::Dy)
    }
    pub fn dym() -> Expr {
        Expr::Var(Var::Dym)
    }
    pub fn ddy() -> Expr {
        Expr::Var(Var::Ddy)
    }
    /// `x - xm`
    pub fn delta_x() -> Expr {
        x() - xm()
    }
    /// `y - ym`
    pub fn delta_y() -> Expr {
        y() - ym()
    }
    /// Finite slope `(y - ym) / (x - xm)`.
    pub fn slope() -> Expr {
        delta_y() / delta_x()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smart_constructors_apply_neutral_elements() {
        let x = jet::x();
        assert_eq!(0.0 * &x + 1.0 * jet::y(), jet::y());
        assert_eq!(Expr::pow(x.clone(), Expr::num(1.0)), x);
        assert_eq!(Expr::neg(Expr::neg(x.clone())), x);
    }

    #[test]
    fn delayed_shift_is_simultaneous() {
        let e: Expr = "x*y + dy - xm".parse().unwrap();
        assert_eq!(e.delayed().to_string(), "(((xm * ym) + dym) - xm)");
    }

    #[test]
    fn quad_substitutes_only_upper_limit() {
        let q = Expr::quad(jet::x() * Expr::param("c"), jet::x(), 0.0);
        let shifted = q.delayed();
        assert!(shifted.depends_on(Var::Xm));
        assert!(!shifted.depends_on(Var::X));
        let bound = q.subst_param("c", &Expr::num(2.0));
        assert!(bound.params().is_empty());
    }

    #[test]
    fn symbol_classification() {
        assert_eq!(Expr::symbol("dym"), Expr::Var(Var::Dym));
        assert_eq!(Expr::symbol("alpha"), Expr::param("alpha"));
        assert_eq!(Var::Dy.delayed(), Some(Var::Dym));
        assert_eq!(Var::Ddy.delayed(), None);
    }
}
