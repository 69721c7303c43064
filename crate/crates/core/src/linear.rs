//! Linear DODSs `ddy = a1 dy + a2 dym + a3 y + a4 ym + b`, `xm = g(x)`.
//!
//! Besides the superposition fields `rho(x)∂y` and `y∂y`, such a system may
//! admit one more symmetry `Z = xi ∂x + (xi' + a1 xi)/2 y∂y`. Its coefficient
//! solves `xi' = K xi` together with `xi(g) = g' xi`, which requires
//! `K(g) g'^2 = g'' + K g'`. When `Z` exists the system maps to constant
//! coefficients `ddy = alpha dym + beta y + gamma ym`, `xm = x - C`, whose
//! exponential solutions `e^(lambda x)` are the real roots of
//! `lambda^2 - alpha lambda e^(-lambda C) - beta - gamma e^(-lambda C)`.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::dods::{self, parse_pair, DodsSystem, InvarianceReport};
use crate::error::{Error, Result};
use crate::expr::{jet, Bindings, Expr, Subst, Var};
use crate::integrate::{self, Trajectory};
use crate::linalg;
use crate::roots;
use crate::sampling::SampleBox;
use crate::symmetry::VectorField;

#[derive(Clone, Debug)]
pub struct LinearDods {
    pub a1: Expr,
    pub a2: Expr,
    pub a3: Expr,
    pub a4: Expr,
    pub b: Expr,
    pub g: Expr,
    pub params: Bindings,
    pub domain: (f64, f64),
}

const GRID: usize = 50;

fn grid(domain: (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| domain.0 + (domain.1 - domain.0) * i as f64 / (n - 1) as f64)
        .collect()
}

fn at_x(e: &Expr, params: &Bindings, x: f64) -> Result<f64> {
    Ok(e.eval(&params.clone().with_var(Var::X, x))?)
}

fn vanishes(e: &Expr, params: &Bindings, xs: &[f64]) -> Result<bool> {
    for &x in xs {
        if at_x(e, params, x)?.abs() > 1e-14 {
            return Ok(false);
        }
    }
    Ok(true)
}

impl LinearDods {
    /// Coefficients are expressions in `x`; `domain` must satisfy
    /// `g(x) < x` throughout and keep `g` nonconstant.
    pub fn new(coeffs: [Expr; 5], g: Expr, domain: (f64, f64)) -> Result<Self> {
        let [a1, a2, a3, a4, b] = coeffs;
        let l = LinearDods {
            a1,
            a2,
            a3,
            a4,
            b,
            g,
            params: Bindings::new(),
            domain,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn parse(coeffs: [&str; 5], g: &str, domain: (f64, f64)) -> Result<Self> {
        let mut e = Vec::with_capacity(5);
        for c in coeffs {
            e.push(c.parse::<Expr>()?);
        }
        let coeffs: [Expr; 5] = e.try_into().expect("five coefficients");
        Self::new(coeffs, g.parse()?, domain)
    }

    /// `ddy = alpha dym + beta y + gamma ym`, `xm = x - C`.
    pub fn canonical(cl: &CanonicalLinear, domain: (f64, f64)) -> Result<Self> {
        Self::new(
            [
                Expr::num(0.0),
                Expr::num(cl.alpha),
                Expr::num(cl.beta),
                Expr::num(cl.gamma),
                Expr::num(0.0),
            ],
            jet::x() - cl.c,
            domain,
        )
    }

    fn coeffs(&self) -> [&Expr; 5] {
        [&self.a1, &self.a2, &self.a3, &self.a4, &self.b]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in ["a1", "a2", "a3", "a4", "b", "g"].iter().zip(self.coeffs().into_iter().chain([&self.g])) {
            if let Some(v) = e.vars().into_iter().find(|v| *v != Var::X) {
                return Err(Error::InvalidSystem(format!("{name} may only depend on x, found `{v}`")));
            }
        }
        if !(self.domain.0 < self.domain.1) {
            return Err(Error::InvalidSystem("empty domain".into()));
        }
        let xs = grid(self.domain, 20);
        if vanishes(&self.a2, &self.params, &xs)? && vanishes(&self.a4, &self.params, &xs)? {
            return Err(Error::InvalidSystem("a2 and a4 both vanish: no delayed term".into()));
        }
        let mut gs = Vec::with_capacity(xs.len());
        for &x in &xs {
            let gx = at_x(&self.g, &self.params, x)?;
            if !(gx < x) {
                return Err(Error::DelayViolation { x, xm: gx });
            }
            gs.push(gx);
        }
        if gs.iter().all(|v| (v - gs[0]).abs() < 1e-14) {
            return Err(Error::InvalidSystem("g must not be constant".into()));
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        vanishes(&self.b, &self.params, &grid(self.domain, 20)).unwrap_or(false)
    }

    /// The same system with `b = 0`.
    pub fn homogeneous_part(&self) -> LinearDods {
        LinearDods {
            b: Expr::num(0.0),
            ..self.clone()
        }
    }

    fn coeff_at(e: &Expr, at: &Expr) -> Expr {
        e.subst(&Subst::new().var(Var::X, at.clone()))
    }

    /// The DODS with `f = a1 dy + a2 dym + a3 y + a4 ym + b`.
    pub fn to_system(&self) -> Result<DodsSystem> {
        let f = &self.a1 * jet::dy() + &self.a2 * jet::dym() + &self.a3 * jet::y() + &self.a4 * jet::ym() + &self.b;
        let mut s = DodsSystem::new(f.simplify(), self.g.clone(), self.params.clone())?;
        s.domain = self.domain;
        s.sample_box = SampleBox::default().with("x", self.domain);
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, e) in ["a1", "a2", "a3", "a4", "b"].iter().zip(self.coeffs()) {
            let _ = writeln!(s, "{k} = {e}");
        }
        let _ = writeln!(s, "g = {}", self.g);
        for (k, v) in self.params.params() {
            let _ = writeln!(s, "param {k} = {v}");
        }
        let _ = writeln!(s, "domain = {},{}", self.domain.0, self.domain.1);
        s
    }
}

impl FromStr for LinearDods {
    type Err = Error;

    /// Keys `a1`..`a4`, `b` (each defaulting to 0), `g`, `param NAME`,
    /// `domain = lo,hi` (default `0.5,2.5`). `#` starts a comment.
    fn from_str(text: &str) -> Result<Self> {
        let mut c: [Option<Expr>; 5] = Default::default();
        let mut g = None;
        let mut params = Bindings::new();
        let mut domain = (0.5, 2.5);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Format { line, msg };
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let expr = |v: &str| v.parse::<Expr>().map_err(|e| bad(e.to_string()));
            match key {
                "a1" => c[0] = Some(expr(value)?),
                "a2" => c[1] = Some(expr(value)?),
                "a3" => c[2] = Some(expr(value)?),
                "a4" => c[3] = Some(expr(value)?),
                "b" => c[4] = Some(expr(value)?),
                "g" => g = Some(expr(value)?),
                "domain" => domain = parse_pair(value).ok_or_else(|| bad(format!("invalid interval `{value}`")))?,
                k if k.starts_with("param ") => {
                    let name = k["param ".len()..].trim();
                    let v = expr(value)?.eval(&params).map_err(|e| bad(e.to_string()))?;
                    params.set(name, v);
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let g = g.ok_or(Error::Format {
            line: 0,
            msg: "missing `g`".into(),
        })?;
        let coeffs = c.map(|e| e.unwrap_or_else(|| Expr::num(0.0)));
        let [a1, a2, a3, a4, b] = coeffs;
        let l = LinearDods {
            a1,
            a2,
            a3,
            a4,
            b,
            g,
            params,
            domain,
        };
        l.validate()?;
        Ok(l)
    }
}

/// `ddy = alpha dym + beta y + gamma ym`, `xm = x - C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalLinear {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
}

impl CanonicalLinear {
    pub fn new(alpha: f64, beta: f64, gamma: f64, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidParams(format!("C must be positive, got {c}")));
        }
        Ok(CanonicalLinear { alpha, beta, gamma, c })
    }

    /// Whether a delayed term is present (`alpha^2 + gamma^2 != 0`). Root
    /// finding accepts the degenerate case, which reduces to `lambda^2 = beta`.
    pub fn has_delay_term(&self) -> bool {
        self.alpha != 0.0 || self.gamma != 0.0
    }

    /// `h(lambda)`.
    pub fn characteristic(&self, l: f64) -> f64 {
        let e = (-l * self.c).exp();
        l * l - self.alpha * l * e - self.beta - self.gamma * e
    }

    pub fn characteristic_derivative(&self, l: f64) -> f64 {
        let e = (-l * self.c).exp();
        2.0 * l - self.alpha * e + self.alpha * self.c * l * e + self.gamma * self.c * e
    }
}

/// Real roots of `h` in `range` from a sign scan over `n_seed` cells,
/// refined by bisection. Touching zeros are included.
pub fn characteristic_roots(cl: &CanonicalLinear, range: (f64, f64), n_seed: usize) -> Vec<f64> {
    let mut f = |l: f64| {
        let v = cl.characteristic(l);
        v.is_finite().then_some(v)
    };
    let mut out = roots::scan(&mut f, range.0, range.1, n_seed.max(1), 1e-10);
    let mut g = |l: f64| cl.characteristic(l);
    out.extend(roots::touching_roots(&mut g, range.0, range.1, n_seed.max(1), 1e-12));
    out.retain(|&l| cl.characteristic(l).abs() < 1e-10);
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (1.0 + b.abs()));
    out
}

/// Substitutes `y = e^(lambda x)` and returns the max of the residual
/// divided by `e^(lambda x)` over `x` in `[0, 1]`; this equals `|h(lambda)|`.
pub fn verify_exponential_solution(cl: &CanonicalLinear, lambda: f64) -> f64 {
    let y = Expr::exp(lambda * jet::x());
    let dy = y.diff(Var::X);
    let ddy = dy.diff(Var::X);
    let back = Subst::new().var(Var::X, jet::x() - cl.c);
    let res = ddy - cl.alpha * dy.subst(&back) - cl.beta * y.clone() - cl.gamma * y.subst(&back);
    let mut worst = 0.0f64;
    for x in grid((0.0, 1.0), 11) {
        let b = Bindings::new().with_var(Var::X, x);
        let (Ok(r), Ok(s)) = (res.eval(&b), y.eval(&b)) else {
            return f64::INFINITY;
        };
        worst = worst.max((r / s).abs());
    }
    worst
}

/// Newton polish of an approximate root.
pub fn refine_root(cl: &CanonicalLinear, mut lambda: f64) -> f64 {
    for _ in 0..50 {
        let d = cl.characteristic_derivative(lambda);
        if d == 0.0 {
            break;
        }
        let step = cl.characteristic(lambda) / d;
        lambda -= step;
        if step.abs() < 1e-16 * (1.0 + lambda.abs()) {
            break;
        }
    }
    lambda
}

/// `max |K(g(x)) g'(x)^2 - g''(x) - K(x) g'(x)|` over `xs`.
pub fn compatibility_residual(g: &Expr, k: &Expr, xs: &[f64]) -> Result<f64> {
    let params = Bindings::new();
    let dg = g.diff(Var::X).simplify();
    let ddg = dg.diff(Var::X).simplify();
    let kg = LinearDods::coeff_at(k, g);
    let r = kg * Expr::powi(dg.clone(), 2) - ddg - k * dg;
    let mut worst = 0.0f64;
    for &x in xs {
        worst = worst.max(at_x(&r, &params, x)?.abs());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KUsed {
    /// From the `ẏ₋` coefficient (`a2 ≢ 0`).
    K1,
    /// From the `y₋` coefficient (`a2 ≡ 0`, `a4 ≢ 0`).
    K2,
}

/// Residuals of the checks run by [`detect_extra_symmetry`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtraChecks {
    pub compatibility: f64,
    pub connection: f64,
    pub condition_a: f64,
    pub condition_b: f64,
    pub condition_c: f64,
}

#[derive(Clone, Debug)]
pub struct ExtraSymmetry {
    pub xi: Expr,
    /// `(xi' + a1 xi) / 2`.
    pub eta_coeff: Expr,
    pub k: Expr,
    pub k_used: KUsed,
    pub field: VectorField,
    pub checks: ExtraChecks,
    pub invariance: InvarianceReport,
}

/// Outcome of the search: the checks are reported even when they fail.
#[derive(Clone, Debug)]
pub enum ExtraOutcome {
    Found(Box<ExtraSymmetry>),
    None { k_used: KUsed, k: Expr, checks: ExtraChecks },
}

impl ExtraOutcome {
    pub fn symmetry(&self) -> Option<&ExtraSymmetry> {
        match self {
            ExtraOutcome::Found(s) => Some(s),
            ExtraOutcome::None { .. } => None,
        }
    }
}

fn k_expr(l: &LinearDods) -> Result<(KUsed, Expr)> {
    let xs = grid(l.domain, 20);
    let a1 = l.a1.bind_params(&l.params);
    let a2 = l.a2.bind_params(&l.params);
    let a4 = l.a4.bind_params(&l.params);
    let g = l.g.bind_params(&l.params);
    let dg = g.diff(Var::X);
    let ddg = dg.diff(Var::X);
    let a1g = LinearDods::coeff_at(&a1, &g);
    if !vanishes(&a2, &Bindings::new(), &xs)? {
        let k = -(a2.diff(Var::X) / &a2) + &a1 / 2.0 - a1g * &dg / 2.0 + ddg / (2.0 * dg);
        Ok((KUsed::K1, k.simplify()))
    } else if !vanishes(&a4, &Bindings::new(), &xs)? {
        let k = -(a4.diff(Var::X) / (2.0 * &a4)) + &a1 / 4.0 - a1g * &dg / 4.0 - ddg / (4.0 * dg);
        Ok((KUsed::K2, k.simplify()))
    } else {
        Err(Error::InvalidSystem("a2 and a4 both vanish".into()))
    }
}

/// Determining conditions on `xi` as expressions, each divided by `xi`.
fn conditions(l: &LinearDods, xi: &Expr) -> [Expr; 4] {
    let p = &l.params;
    let (a1, a2, a3, a4) = (l.a1.bind_params(p), l.a2.bind_params(p), l.a3.bind_params(p), l.a4.bind_params(p));
    let g = l.g.bind_params(p);
    let d = |e: &Expr| e.diff(Var::X).simplify();
    let (dg, ddg) = (d(&g), d(&d(&g)));
    let dddg = d(&ddg);
    let (x1, x2) = (d(xi), d(&d(xi)));
    let x3 = d(&x2);
    let a1g = LinearDods::coeff_at(&a1, &g);
    let da1g = LinearDods::coeff_at(&d(&a1), &g);
    let (da1, dda1) = (d(&a1), d(&d(&a1)));
    let (da2, da3, da4) = (d(&a2), d(&a3), d(&a4));
    let connection = LinearDods::coeff_at(xi, &g) - &dg * xi;
    let cond_a = &a2 * &x1 + (&da2 + &a2 / 2.0 * (-&a1 + &a1g * &dg - &ddg / &dg)) * xi;
    let cond_b = x3 + (2.0 * &da1 - Expr::powi(a1.clone(), 2) - 4.0 * &a3) * &x1 + (dda1 - &a1 * &da1 - 2.0 * da3) * xi;
    let cond_c = &a2 / &dg * x2
        + (&a2 * (&a1g + &ddg / Expr::powi(dg.clone(), 2)) + 4.0 * &a4) * &x1
        + (2.0 * da4
            + &a2 * (da1g * &dg + &a1g * &ddg / &dg + dddg / Expr::powi(dg.clone(), 2) - Expr::powi(ddg.clone(), 2) / Expr::powi(dg.clone(), 3))
            + &a4 * (-&a1 + &a1g * &dg + &ddg / &dg))
            * xi;
    [connection, cond_a, cond_b, cond_c].map(|c| c / xi)
}

/// Looks for `Z = xi ∂x + (xi' + a1 xi)/2 y∂y` with `xi = exp(∫K)`.
pub fn detect_extra_symmetry(l: &LinearDods) -> Result<ExtraOutcome> {
    if !l.is_homogeneous() {
        return Err(Error::NonHomogeneous);
    }
    let (k_used, k) = k_expr(l)?;
    let xs = grid(l.domain, GRID);
    let g = l.g.bind_params(&l.params);
    let compatibility = compatibility_residual(&g, &k, &xs)?;
    let xi = Expr::exp(Expr::quad(k.clone(), jet::x(), l.domain.0)).simplify();
    let conds = conditions(l, &xi);
    let mut worst = [0.0f64; 4];
    let empty = Bindings::new();
    for &x in &xs {
        for (w, c) in worst.iter_mut().zip(&conds) {
            *w = w.max(at_x(c, &empty, x)?.abs());
        }
    }
    let checks = ExtraChecks {
        compatibility,
        connection: worst[0],
        condition_a: worst[1],
        condition_b: worst[2],
        condition_c: worst[3],
    };
    let ok = compatibility < 1e-9 && worst.iter().all(|&w| w < 1e-7);
    if !ok {
        return Ok(ExtraOutcome::None { k_used, k, checks });
    }
    let a1 = l.a1.bind_params(&l.params);
    let eta_coeff = ((xi.diff(Var::X) + a1 * &xi) / 2.0).simplify();
    let field = VectorField::new(xi.clone(), &eta_coeff * jet::y())?.with_label("Z");
    let sys = l.to_system()?;
    let invariance = dods::check_invariance(&sys, &field, 100)?;
    if !invariance.passes() {
        return Ok(ExtraOutcome::None { k_used, k, checks });
    }
    Ok(ExtraOutcome::Found(Box::new(ExtraSymmetry {
        xi,
        eta_coeff,
        k,
        k_used,
        field,
        checks,
        invariance,
    })))
}

/// `ρ(x)∂y` for a known solution `ρ` of a homogeneous system, or
/// `(y - σ)∂y` for a particular solution `σ` of an inhomogeneous one.
pub fn solution_field(rho: &Expr) -> Result<VectorField> {
    VectorField::new(Expr::num(0.0), rho.clone())
}

pub fn shifted_scaling(sigma: &Expr) -> Result<VectorField> {
    VectorField::new(Expr::num(0.0), jet::y() - sigma).map(|f| f.with_label("(y - σ)∂y"))
}

#[derive(Clone, Debug)]
pub struct LinearSymmetryReport {
    pub scaling: InvarianceReport,
    /// Per basis solution: max change of the pointwise residual per unit `eps`
    /// after `y -> y + eps rho`.
    pub superposition: Vec<f64>,
    /// Residual of each basis solution itself.
    pub basis_residuals: Vec<f64>,
}

impl LinearSymmetryReport {
    pub fn passes(&self) -> bool {
        self.scaling.passes() && self.superposition.iter().all(|&d| d < 1e-6)
    }
}

/// Checks `y∂y` by invariance and `ρ∂y` by perturbing the first solution
/// with each basis solution. All trajectories must share their nodes.
pub fn verify_linear_symmetries(l: &LinearDods, basis_solutions: &[Trajectory]) -> Result<LinearSymmetryReport> {
    if !l.is_homogeneous() {
        return Err(Error::NonHomogeneous);
    }
    let sys = l.to_system()?;
    let y = VectorField::parse("0", "y")?.with_label("y∂y");
    let scaling = dods::check_invariance(&sys, &y, 200)?;
    let mut superposition = Vec::new();
    let mut basis_residuals = Vec::new();
    if let Some(base) = basis_solutions.first() {
        let r0 = integrate::residual_samples(&sys, base)?;
        let eps = 0.1;
        for rho in basis_solutions {
            let comb = base.combine(1.0, rho, eps)?;
            let r1 = integrate::residual_samples(&sys, &comb)?;
            let d = r0
                .iter()
                .zip(&r1)
                .map(|(a, b)| (a.1 - b.1).abs())
                .fold(0.0f64, f64::max);
            superposition.push(d / eps);
            basis_residuals.push(integrate::residual_on_trajectory(&sys, rho, usize::MAX)?.dode);
        }
    }
    Ok(LinearSymmetryReport {
        scaling,
        superposition,
        basis_residuals,
    })
}

/// Canonical constants reached through `Z`, with the fit residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalFit {
    pub canonical: CanonicalLinear,
    /// Constant-coefficient form before removing `dy`: `(a1, a2, a3, a4)`.
    pub transformed: [f64; 4],
    /// Max residual of the fitted constant-coefficient DODE.
    pub residual: f64,
    /// Spread of `x̄ - x̄₋` over the samples.
    pub delay_spread: f64,
}

/// Maps jets through `x̄ = ∫dx/xi`, `ȳ = xi^(-1/2) e^(-∫a1/2) y`, fits constant
/// coefficients to the image and then removes `dȳ` by `e^(-a1 x̄/2)`.
pub fn canonical_transform(l: &LinearDods, z: &ExtraSymmetry, samples: usize) -> Result<CanonicalFit> {
    let p = &l.params;
    let a0 = l.domain.0;
    let xi = &z.xi;
    let a1 = l.a1.bind_params(p);
    let xbar = Expr::quad(Expr::num(1.0) / xi, jet::x(), a0).simplify();
    let w = (Expr::exp(-0.5 * Expr::quad(a1.clone(), jet::x(), a0)) / Expr::sqrt(xi.clone())).simplify();
    let dw = w.diff(Var::X).simplify();
    let ddw = dw.diff(Var::X).simplify();
    let dxi = xi.diff(Var::X).simplify();
    let sys = l.to_system()?;
    let g = l.g.bind_params(p);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut deltas = Vec::new();
    let xs = grid((l.domain.0 + 0.2 * (l.domain.1 - l.domain.0), l.domain.1), samples.max(6));
    let mut rng = crate::sampling::rng(crate::sampling::DEFAULT_SEED);
    for &x in &xs {
        let xm = at_x(&g, p, x)?;
        let jet_vals: [f64; 4] = std::array::from_fn(|_| crate::sampling::uniform(&mut rng, (-1.0, 1.0)));
        let (y, dy, ym, dym) = (jet_vals[0], jet_vals[1], jet_vals[2], jet_vals[3]);
        let mut b = p.clone();
        for (v, val) in [(Var::X, x), (Var::Y, y), (Var::Dy, dy), (Var::Xm, xm), (Var::Ym, ym), (Var::Dym, dym)] {
            b.set_var(v, val);
        }
        let ddy = sys.f.eval(&b)?;
        let ev = |e: &Expr, at: f64| at_x(e, &Bindings::new(), at);
        let (wx, dwx, ddwx, xix, dxix) = (ev(&w, x)?, ev(&dw, x)?, ev(&ddw, x)?, ev(xi, x)?, ev(&dxi, x)?);
        let yb = wx * y;
        let dyb = xix * (dwx * y + wx * dy);
        let ddyb = xix * (dxix * (dwx * y + wx * dy) + xix * (ddwx * y + 2.0 * dwx * dy + wx * ddy));
        let (wm, dwm, xim) = (ev(&w, xm)?, ev(&dw, xm)?, ev(xi, xm)?);
        let ymb = wm * ym;
        let dymb = xim * (dwm * ym + wm * dym);
        rows.extend_from_slice(&[dyb, dymb, yb, ymb]);
        rhs.push(ddyb);
        deltas.push(ev(&xbar, x)? - ev(&xbar, xm)?);
    }
    let a = DMatrix::from_row_slice(rhs.len(), 4, &rows);
    let bvec = DVector::from_vec(rhs);
    let (coef, rank) = linalg::lstsq(&a, &bvec, linalg::RANK_TOL);
    if rank < 4 {
        return Err(Error::RankDeficient("samples do not determine the transformed coefficients".into()));
    }
    let residual = linalg::max_residual(&a, &coef, &bvec);
    let c = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let delay_spread = deltas.iter().map(|d| (d - c).abs()).fold(0.0f64, f64::max);
    let (t1, t2, t3, t4) = (coef[0], coef[1], coef[2], coef[3]);
    let e = (-0.5 * t1 * c).exp();
    let canonical = CanonicalLinear {
        alpha: t2 * e,
        beta: t3 + t1 * t1 / 4.0,
        gamma: e * (t4 + t1 * t2 / 2.0),
        c,
    };
    Ok(CanonicalFit {
        canonical,
        transformed: [t1, t2, t3, t4],
        residual,
        delay_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{Dy0, HistoryFunction};

    fn cl(a: f64, b: f64, g: f64, c: f64) -> CanonicalLinear {
        CanonicalLinear::new(a, b, g, c).unwrap()
    }

    #[test]
    fn characteristic_roots_examples() {
        let r = characteristic_roots(&cl(0.0, 1.0, 0.0, 1.0), (-3.0, 3.0), 600);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 1.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
        let c = cl(0.0, 0.0, 1.0, 1.0);
        let r = characteristic_roots(&c, (0.0, 3.0), 300);
        assert_eq!(r.len(), 1);
        assert!((r[0] * r[0] * r[0].exp() - 1.0).abs() < 1e-10);
        assert!((r[0] - 0.7035).abs() < 1e-4);
        let r = characteristic_roots(&cl(1.0, 0.0, 0.0, 1.0), (-1.0, 2.0), 301);
        assert!(r.iter().any(|l| l.abs() < 1e-12));
        assert!((verify_exponential_solution(&cl(0.0, 1.0, 0.0, 1.0), 2.0) - 3.0).abs() < 1e-12);
        assert!(verify_exponential_solution(&cl(0.0, 1.0, 0.0, 1.0), 1.0) < 1e-12);
    }

    #[test]
    fn compatibility_examples() {
        let xs = grid((0.5, 2.5), 50);
        let r = compatibility_residual(&"x - 0.7".parse().unwrap(), &Expr::num(1.3), &xs).unwrap();
        assert!(r < 1e-12);
        let r = compatibility_residual(&"0.5*x".parse().unwrap(), &"2/x".parse().unwrap(), &xs).unwrap();
        assert!(r < 1e-12);
        let r = compatibility_residual(&"x - 1".parse().unwrap(), &"x".parse().unwrap(), &xs).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_system_has_translation() {
        let l = LinearDods::canonical(&cl(0.5, 1.0, -0.3, 1.0), (0.5, 2.5)).unwrap();
        let z = detect_extra_symmetry(&l).unwrap();
        let z = z.symmetry().expect("Z = ∂x");
        for x in [0.5, 1.0, 2.0] {
            assert!((at_x(&z.xi, &Bindings::new(), x).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(z.invariance.passes());
    }

    #[test]
    fn variable_and_exponential_cases_rejected() {
        let l = LinearDods::parse(["0", "1/x^2", "0", "0", "0"], "0.5*x", (0.5, 2.5)).unwrap();
        let o = detect_extra_symmetry(&l).unwrap();
        assert!(o.symmetry().is_none());
        let l = LinearDods::parse(["0", "0", "0", "exp(x)", "0"], "x - 1", (0.5, 2.5)).unwrap();
        match detect_extra_symmetry(&l).unwrap() {
            ExtraOutcome::None { k_used, k, .. } => {
                assert_eq!(k_used, KUsed::K2);
                assert_eq!(k.as_const(), Some(-0.5));
            }
            ExtraOutcome::Found(_) => panic!("no extra symmetry expected"),
        }
    }

    #[test]
    fn transform_recovers_constant_coefficients() {
        // a1 = 0.4 is removed by the exponential rescaling.
        let l = LinearDods::parse(["0.4", "0.5", "1", "-0.3", "0"], "x - 0.8", (0.5, 2.5)).unwrap();
        let z = detect_extra_symmetry(&l).unwrap();
        let z = z.symmetry().unwrap();
        let fit = canonical_transform(&l, z, 12).unwrap();
        let e = (-0.2f64 * 0.8).exp();
        assert!(fit.residual < 1e-9 && fit.delay_spread < 1e-9);
        assert!((fit.canonical.alpha - 0.5 * e).abs() < 1e-8);
        assert!((fit.canonical.beta - (1.0 + 0.04)).abs() < 1e-8);
        assert!((fit.canonical.gamma - e * (-0.3 + 0.1)).abs() < 1e-8);
    }

    #[test]
    fn superposition_and_homogeneity() {
        let l = LinearDods::parse(["0", "0", "0", "1", "0"], "x - 1", (0.0, 3.0)).unwrap();
        let sys = l.to_system().unwrap();
        let t1 = integrate::solve(&sys, &HistoryFunction::symbolic("x".parse().unwrap(), -1.0, 0.0).unwrap(), Dy0::FromPhi, 2.0, 1e-3).unwrap();
        let t2 = integrate::solve(&sys, &HistoryFunction::symbolic("cos(x)".parse().unwrap(), -1.0, 0.0).unwrap(), Dy0::FromPhi, 2.0, 1e-3).unwrap();
        let rep = verify_linear_symmetries(&l, &[t1, t2]).unwrap();
        assert!(rep.passes(), "{rep:?}");
        assert!(rep.scaling.max_residual() < 1e-10);
        let inh = LinearDods::parse(["0", "0", "0", "1", "1"], "x - 1", (0.0, 3.0)).unwrap();
        assert!(matches!(verify_linear_symmetries(&inh, &[]), Err(Error::NonHomogeneous)));
        let y_sigma = shifted_scaling(&Expr::num(-1.0)).unwrap();
        let r = dods::check_invariance(&inh.to_system().unwrap(), &y_sigma, 100).unwrap();
        assert!(r.passes());
    }

    #[test]
    fn text_format_round_trip() {
        let l = LinearDods::parse(["0", "1/x^2", "0", "0", "0"], "0.5*x", (0.5, 2.5)).unwrap();
        let back: LinearDods = l.to_text().parse().unwrap();
        assert_eq!(back.to_text(), l.to_text());
        assert!(matches!("g = x - 1\nfoo = 2".parse::<LinearDods>(), Err(Error::Format { line: 2, .. })));
    }
}
