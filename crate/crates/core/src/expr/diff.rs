use super::{BinOp, Expr, Func, Subst, Var};

impl Expr {
    /// Exact partial derivative with respect to `v`.
    ///
    /// The result is built with the neutral-element constructors, so
    /// `diff(x*y, x)` is literally `y`; run [`Expr::simplify`] for like-term
    /// collection. `abs` differentiates to `sgn` and `sgn` to zero.
    pub fn diff(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return Expr::Const(0.0);
        }
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::Const(0.0),
            Expr::Var(w) => Expr::Const(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.diff(v)),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.as_ref(), b.as_ref());
                match op {
                    BinOp::Add => a.diff(v) + b.diff(v),
                    BinOp::Sub => a.diff(v) - b.diff(v),
                    BinOp::Mul => a.diff(v) * b + a * b.diff(v),
                    BinOp::Div => {
                        let da = a.diff(v);
                        let db = b.diff(v);
                        if db.is_zero() {
                            da / b
                        } else {
                            (da * b - a * db) / Expr::powi(b.clone(), 2)
                        }
                    }
                    BinOp::Pow => {
                        if !b.depends_on(v) {
                            // b * a^(b-1) * a'
                            let lowered = Expr::pow(a.clone(), b - 1.0);
                            b * lowered * a.diff(v)
                        } else {
                            // a^b * (b' ln a + b a'/a)
                            let da = a.diff(v);
                            let db = b.diff(v);
                            let mut inner = db * Expr::ln(a.clone());
                            if !da.is_zero() {
                                inner = inner + b * da / a;
                            }
                            self * inner
                        }
                    }
                }
            }
            Expr::Call(f, a) => {
                let a = a.as_ref();
                let outer = match f {
                    Func::Sin => Expr::cos(a.clone()),
                    Func::Cos => Expr::neg(Expr::sin(a.clone())),
                    Func::Tan => 1.0 / Expr::powi(Expr::cos(a.clone()), 2),
                    Func::Arctan => 1.0 / (1.0 + Expr::powi(a.clone(), 2)),
                    Func::Exp => self.clone(),
                    Func::Ln => 1.0 / a,
                    Func::Sqrt => 1.0 / (2.0 * self),
                    Func::Abs => Expr::sgn(a.clone()),
                    Func::Sgn => Expr::Const(0.0),
                };
                chain(outer, a.diff(v))
            }
            Expr::Quad(q) => {
                let at_upper = q
                    .integrand
                    .subst(&Subst::new().var(Var::X, q.upper.clone()));
                at_upper * q.upper.diff(v)
            }
        }
    }

    /// Derivative followed by simplification.
    pub fn diff_simplified(&self, v: Var) -> Expr {
        self.diff(v).simplify()
    }
}

fn chain(outer: Expr, inner: Expr) -> Expr {
    if inner.is_one() {
        outer
    } else if let Expr::Binary(BinOp::Div, n, d) = &outer {
        if n.is_one() {
            return inner / d.as_ref();
        }
        outer * inner
    } else {
        outer * inner
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{Bindings, Expr, Var};

    fn d(src: &str, v: Var) -> Expr {
        src.parse::<Expr>().unwrap().diff(v)
    }

    #[test]
    fn product_rule_base_case() {
        assert_eq!(d("x*y", Var::X).to_string(), "y");
    }

    #[test]
    fn arctan_table_entry() {
        assert_eq!(
            d("arctan(dy)", Var::Dy).to_string(),
            "(1 / (1 + (dy ^ 2)))"
        );
    }

    #[test]
    fn matches_central_difference() {
        let e: Expr = "exp(a*x)*sin(x)".parse().unwrap();
        let de = e.diff(Var::X);
        let b = |x: f64| Bindings::new().with("x", x).with("a", 2.0);
        let h = 1e-5;
        let fd = (e.eval(&b(0.3 + h)).unwrap() - e.eval(&b(0.3 - h)).unwrap()) / (2.0 * h);
        let exact = de.eval(&b(0.3)).unwrap();
        assert!((exact - fd).abs() < 1e-8, "{exact} vs {fd}");
    }

    #[test]
    fn variable_exponent_and_quadrature() {
        let b = Bindings::new().with("x", 1.3);
        let e = d("x^x", Var::X).eval(&b).unwrap();
        assert!((e - 1.3f64.powf(1.3) * (1.3f64.ln() + 1.0)).abs() < 1e-12);
        // d/dx ∫_0^{x^2} exp(s) ds = exp(x^2) * 2x
        let e = d("quad(exp(x), x^2, 0)", Var::X).eval(&b).unwrap();
        assert!((e - (1.69f64).exp() * 2.6).abs() < 1e-12);
    }

    #[test]
    fn abs_and_sgn() {
        let b = Bindings::new().with("y", -0.5);
        assert_eq!(d("abs(y)", Var::Y).eval(&b).unwrap(), -1.0);
        assert_eq!(d("sgn(y)", Var::Y).eval(&b).unwrap(), 0.0);
    }
}
