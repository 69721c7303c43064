use std::collections::BTreeMap;

use super::eval::call_checked;
use super::{BinOp, Expr};

impl Expr {
    /// Constant folding, neutral-element removal, collection of like terms in
    /// sums and of equal factors in products. No identities beyond that.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(_) | Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => {
                let mut terms = Vec::new();
                flatten_sum(self, 1.0, &mut terms);
                rebuild_sum(terms)
            }
            Expr::Binary(BinOp::Mul | BinOp::Div, _, _) => {
                let mut acc = Product::default();
                acc.absorb(self, 1.0);
                acc.rebuild()
            }
            Expr::Binary(BinOp::Pow, a, b) => Expr::pow(a.simplify(), b.simplify()),
            Expr::Call(f, a) => {
                let a = a.simplify();
                if let Some(v) = a.as_const().and_then(|c| call_checked(*f, c)) {
                    return Expr::Const(v);
                }
                Expr::Call(*f, std::sync::Arc::new(a))
            }
            Expr::Quad(q) => Expr::quad(q.integrand.simplify(), q.upper.simplify(), q.anchor),
        }
    }
}

/// Splits a simplified term into a numeric coefficient and the rest.
fn split_coefficient(e: &Expr) -> (f64, Option<Expr>) {
    match e {
        Expr::Const(c) => (*c, None),
        Expr::Neg(a) => {
            let (c, r) = split_coefficient(a);
            (-c, r)
        }
        Expr::Binary(BinOp::Mul, a, b) => match a.as_const() {
            Some(c) => (c, Some((**b).clone())),
            None => (1.0, Some(e.clone())),
        },
        Expr::Binary(BinOp::Div, n, d) => {
            let (c, rest) = split_coefficient(n);
            let rest = match rest {
                Some(r) => Expr::div(r, (**d).clone()),
                None => Expr::div(Expr::Const(1.0), (**d).clone()),
            };
            (c, Some(rest))
        }
        _ => (1.0, Some(e.clone())),
    }
}

fn flatten_sum(e: &Expr, sign: f64, out: &mut Vec<(f64, Option<Expr>)>) {
    match e {
        Expr::Binary(BinOp::Add, a, b) => {
            flatten_sum(a, sign, out);
            flatten_sum(b, sign, out);
        }
        Expr::Binary(BinOp::Sub, a, b) => {
            flatten_sum(a, sign, out);
            flatten_sum(b, -sign, out);
        }
        Expr::Neg(a) => flatten_sum(a, -sign, out),
        other => {
            let (c, r) = split_coefficient(&other.simplify());
            out.push((sign * c, r));
        }
    }
}

fn rebuild_sum(terms: Vec<(f64, Option<Expr>)>) -> Expr {
    let mut constant = 0.0;
    let mut groups: BTreeMap<String, (f64, Expr)> = BTreeMap::new();
    for (c, rest) in terms {
        match rest {
            None => constant += c,
            Some(r) => {
                let key = r.to_string();
                groups.entry(key).or_insert((0.0, r)).0 += c;
            }
        }
    }
    let mut out: Option<Expr> = None;
    for (_, (c, r)) in groups {
        if c == 0.0 {
            continue;
        }
        out = Some(match out {
            None => Expr::mul(Expr::Const(c), r),
            Some(acc) if c < 0.0 => Expr::sub(acc, Expr::mul(Expr::Const(-c), r)),
            Some(acc) => Expr::add(acc, Expr::mul(Expr::Const(c), r)),
        });
    }
    match out {
        None => Expr::Const(constant),
        Some(acc) if constant < 0.0 => Expr::sub(acc, Expr::Const(-constant)),
        Some(acc) => Expr::add(acc, Expr::Const(constant)),
    }
}

#[derive(Default)]
struct Product {
    coef: f64,
    init: bool,
    factors: BTreeMap<String, (Expr, f64)>,
}

impl Product {
    fn coef(&mut self) -> &mut f64 {
        if !self.init {
            self.coef = 1.0;
            self.init = true;
        }
        &mut self.coef
    }

    fn push(&mut self, base: Expr, exp: f64) {
        let key = base.to_string();
        self.factors.entry(key).or_insert((base, 0.0)).1 += exp;
    }

    fn absorb(&mut self, e: &Expr, exp: f64) {
        match e {
            Expr::Binary(BinOp::Mul, a, b) => {
                self.absorb(a, exp);
                self.absorb(b, exp);
            }
            Expr::Binary(BinOp::Div, a, b) => {
                self.absorb(a, exp);
                self.absorb(b, -exp);
            }
            Expr::Neg(a) => {
                *self.coef() *= -1.0;
                self.absorb(a, exp);
            }
            other => {
                let s = other.simplify();
                match &s {
                    Expr::Const(c) => *self.coef() *= c.powf(exp),
                    Expr::Binary(BinOp::Mul | BinOp::Div, _, _) | Expr::Neg(_) => {
                        self.absorb(&s, exp)
                    }
                    Expr::Binary(BinOp::Pow, base, p) => match p.as_const() {
                        Some(k) if !matches!(base.as_ref(), Expr::Const(_)) => {
                            self.push((**base).clone(), k * exp)
                        }
                        _ => self.push(s.clone(), exp),
                    },
                    _ => self.push(s, exp),
                }
            }
        }
    }

    fn rebuild(mut self) -> Expr {
        let coef = *self.coef();
        if coef == 0.0 {
            return Expr::Const(0.0);
        }
        let mut num: Option<Expr> = None;
        let mut den: Option<Expr> = None;
        for (_, (base, k)) in self.factors {
            if k == 0.0 {
                continue;
            }
            if k > 0.0 {
                let f = Expr::pow(base, Expr::Const(k));
                num = Some(match num {
                    None => f,
                    Some(acc) => Expr::mul(acc, f),
                });
            } else {
                let f = Expr::pow(base, Expr::Const(-k));
                den = Some(match den {
                    None => f,
                    Some(acc) => Expr::mul(acc, f),
                });
            }
        }
        let num = match num {
            None => Expr::Const(coef),
            Some(n) => Expr::mul(Expr::Const(coef), n),
        };
        match den {
            None => num,
            Some(d) => Expr::div(num, d),
        }
    }
}
