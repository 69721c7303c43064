use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: &'static str },
}

/// Numeric values for variables and parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bindings {
    vars: [Option<f64>; 9],
    params: BTreeMap<String, f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds a variable or parameter by name.
    pub fn set(&mut self, name: &str, value: f64) {
        match Var::from_name(name) {
            Some(v) => self.vars[v.index()] = Some(value),
            None => {
                self.params.insert(name.to_string(), value);
            }
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set_var(&mut self, v: Var, value: f64) {
        self.vars[v.index()] = Some(value);
    }

    pub fn with_var(mut self, v: Var, value: f64) -> Self {
        self.set_var(v, value);
        self
    }

    pub fn unset_var(&mut self, v: Var) {
        self.vars[v.index()] = None;
    }

    pub fn var(&self, v: Var) -> Option<f64> {
        self.vars[v.index()]
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Result<f64, EvalError> {
        let found = match Var::from_name(name) {
            Some(v) => self.var(v),
            None => self.param(name),
        };
        found.ok_or_else(|| EvalError::Unbound(name.to_string()))
    }

    /// Copy of the parameter table only.
    pub fn params_only(&self) -> Bindings {
        Bindings {
            vars: [None; 9],
            params: self.params.clone(),
        }
    }

    pub fn params(&self) -> impl Iterator<Item = (&str, f64)> {
        self.params.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Adds every binding of `other`, overriding existing ones.
    pub fn extend(&mut self, other: &Bindings) {
        for (i, v) in other.vars.iter().enumerate() {
            if v.is_some() {
                self.vars[i] = *v;
            }
        }
        for (k, v) in &other.params {
            self.params.insert(k.clone(), *v);
        }
    }
}

pub(crate) fn pow_checked(a: f64, b: f64) -> Option<f64> {
    let v = if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        if a == 0.0 && b < 0.0 {
            return None;
        }
        a.powi(b as i32)
    } else {
        if a < 0.0 || (a == 0.0 && b < 0.0) {
            return None;
        }
        a.powf(b)
    };
    v.is_finite().then_some(v)
}

pub(crate) fn call_checked(f: Func, a: f64) -> Option<f64> {
    let v = match f {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Tan => a.tan(),
        Func::Arctan => a.atan(),
        Func::Exp => a.exp(),
        Func::Ln if a <= 0.0 => return None,
        Func::Ln => a.ln(),
        Func::Sqrt if a < 0.0 => return None,
        Func::Sqrt => a.sqrt(),
        Func::Abs => a.abs(),
        Func::Sgn if a > 0.0 => 1.0,
        Func::Sgn if a < 0.0 => -1.0,
        Func::Sgn => 0.0,
    };
    v.is_finite().then_some(v)
}

fn domain(e: &Expr, reason: &'static str) -> EvalError {
    let mut text = e.to_string();
    if text.len() > 120 {
        text.truncate(117);
        text.push_str("...");
    }
    EvalError::Domain { expr: text, reason }
}

impl Expr {
    /// Evaluates the expression. Unbound symbols and domain violations
    /// (division by zero, logarithm or root of a negative, non-finite
    /// results) are errors rather than NaN.
    pub fn eval(&self, b: &Bindings) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => b
                .var(*v)
                .ok_or_else(|| EvalError::Unbound(v.name().to_string()))?,
            Expr::Param(p) => b
                .param(p)
                .ok_or_else(|| EvalError::Unbound(p.to_string()))?,
            Expr::Neg(a) => -a.eval(b)?,
            Expr::Binary(op, l, r) => {
                let x = l.eval(b)?;
                let y = r.eval(b)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(domain(self, "division by zero"));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        pow_checked(x, y).ok_or_else(|| domain(self, "invalid power"))?
                    }
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(b)?;
                call_checked(*f, x).ok_or_else(|| domain(self, "argument outside domain"))?
            }
            Expr::Quad(q) => {
                let upper = q.upper.eval(b)?;
                let mut inner = b.params_only();
                let mut integrand = |s: f64| -> Result<f64, EvalError> {
                    inner.set_var(Var::X, s);
                    q.integrand.eval(&inner)
                };
                crate::quadrature::integrate(&mut integrand, q.anchor, upper, 1e-13)?
            }
        };
        if !v.is_finite() {
            return Err(domain(self, "non-finite result"));
        }
        Ok(v)
    }

    /// Evaluates with parameters only; fails if any variable occurs.
    pub fn eval_const(&self, b: &Bindings) -> Result<f64, EvalError> {
        self.eval(&b.params_only())
    }
}
