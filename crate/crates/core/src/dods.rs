//! Second-order delay ordinary differential systems
//! `ddy = f(x, y, ym, dy, dym)`, `xm = g(x, y, ym, dy, dym)` and the
//! on-manifold invariance test for point symmetries.
//!
//! The delay relation is stored solved for `xm`. When `g` itself mentions
//! `xm` (for instance through the finite slope `(y - ym)/(x - xm)`), the
//! relation is treated as implicit and solved numerically for `x - xm` in the
//! bracket given by [`SampleBox::delta`].

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::roots;
use crate::sampling::{self, SampleBox};
use crate::symmetry::{jet_gradient, ProlongedField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DelayKind {
    /// `xm = x - tau` with constant `tau`.
    Constant,
    /// `xm` depends on `x` only.
    Independent,
    /// `xm` depends on the solution.
    State,
}

impl DelayKind {
    pub fn name(self) -> &'static str {
        match self {
            DelayKind::Constant => "constant",
            DelayKind::Independent => "independent",
            DelayKind::State => "state",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(DelayKind::Constant),
            "independent" => Some(DelayKind::Independent),
            "state" => Some(DelayKind::State),
            _ => None,
        }
    }

    /// Classifies a delay expression by the variables it mentions.
    pub fn infer(g: &Expr) -> Self {
        let vars = g.vars();
        if vars.iter().any(|v| !matches!(v, Var::X)) {
            DelayKind::State
        } else {
            let d = (Expr::var(Var::X) - g).simplify();
            if d.depends_on(Var::X) {
                DelayKind::Independent
            } else {
                DelayKind::Constant
            }
        }
    }
}

const ALLOWED: [Var; 6] = [Var::X, Var::Y, Var::Xm, Var::Ym, Var::Dy, Var::Dym];

#[derive(Clone, Debug)]
pub struct DodsSystem {
    pub f: Expr,
    pub g: Expr,
    pub params: Bindings,
    pub delay_kind: DelayKind,
    pub domain: (f64, f64),
    pub sample_box: SampleBox,
}

impl DodsSystem {
    /// Builds a system with the delay kind inferred from `g`. No genuineness
    /// checks are run; see [`validate`](Self::validate).
    pub fn new(f: Expr, g: Expr, params: Bindings) -> Result<Self> {
        for (name, e) in [("f", &f), ("g", &g)] {
            if let Some(v) = e.vars().into_iter().find(|v| !ALLOWED.contains(v)) {
                return Err(Error::InvalidSystem(format!("{name} must not depend on `{v}`")));
            }
        }
        let delay_kind = DelayKind::infer(&g);
        Ok(DodsSystem {
            f,
            g,
            params,
            delay_kind,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
            sample_box: SampleBox::default(),
        })
    }

    pub fn parse(f: &str, g: &str, params: Bindings) -> Result<Self> {
        Self::new(f.parse()?, g.parse()?, params)
    }

    pub fn with_box(mut self, b: SampleBox) -> Self {
        self.sample_box = b;
        self
    }

    pub fn with_param(mut self, name: &str, v: f64) -> Self {
        self.params.set(name, v);
        self
    }

    /// Whether the delay relation mentions `xm` on its right-hand side.
    pub fn is_implicit(&self) -> bool {
        self.g.depends_on(Var::Xm)
    }

    /// `xm` at a point whose `x, y, ym, dy, dym` (and parameters) are bound.
    pub fn solve_delay(&self, b: &Bindings) -> Result<f64> {
        if !self.is_implicit() {
            return Ok(self.g.eval(b)?);
        }
        let x = b
            .var(Var::X)
            .ok_or_else(|| Error::InvalidSystem("x unbound".into()))?;
        let mut scratch = b.clone();
        let mut phi = |delta: f64| -> Option<f64> {
            scratch.set_var(Var::Xm, x - delta);
            self.g.eval(&scratch).ok().map(|g| x - delta - g)
        };
        let (lo, hi) = self.sample_box.delta;
        let delta = roots::first_root(&mut phi, lo, hi, 400, 1e-9)
            .ok_or_else(|| Error::NoRoot(format!("implicit delay relation has no root for x - xm in [{lo}, {hi}]")))?;
        Ok(x - delta)
    }

    /// Completes a free point `(x, y, ym, dy, dym)` to the solution
    /// manifold: `xm` from the delay relation, then `ddy` from `f`.
    pub fn manifold_point(&self, free: [f64; 5]) -> Result<Bindings> {
        let mut b = self.params.clone();
        let [x, y, ym, dy, dym] = free;
        b.set_var(Var::X, x);
        b.set_var(Var::Y, y);
        b.set_var(Var::Ym, ym);
        b.set_var(Var::Dy, dy);
        b.set_var(Var::Dym, dym);
        let xm = self.solve_delay(&b)?;
        if !(xm < x) {
            return Err(Error::DelayViolation { x, xm });
        }
        b.set_var(Var::Xm, xm);
        let ddy = self.f.eval(&b)?;
        b.set_var(Var::Ddy, ddy);
        Ok(b)
    }

    /// `ddy - f`
    pub fn phi_dode(&self) -> Expr {
        Expr::var(Var::Ddy) - &self.f
    }

    /// `xm - g`
    pub fn phi_delay(&self) -> Expr {
        Expr::var(Var::Xm) - &self.g
    }

    /// Checks that the delay is genuine (the total derivative of `f` along
    /// `ym` or `dym` is nonzero somewhere) and that `xm < x` at 20 sampled
    /// points.
    pub fn validate(&self) -> Result<()> {
        let phi2 = self.phi_delay();
        let d2 = [Var::Xm, Var::Ym, Var::Dym].map(|v| phi2.diff(v));
        let df = [Var::Xm, Var::Ym, Var::Dym].map(|v| self.f.diff(v));
        let mut rng = sampling::rng(sampling::DEFAULT_SEED ^ 0x5eed);
        let mut genuine = false;
        let mut ok = 0;
        for _ in 0..200 {
            if ok == 20 {
                break;
            }
            let free = self.sample_box.draw(&mut rng);
            let b = match self.manifold_point(free) {
                Ok(b) => b,
                Err(Error::DelayViolation { x, xm }) => {
                    return Err(Error::InvalidSystem(format!(
                        "delay relation gives xm = {xm} >= x = {x}"
                    )))
                }
                Err(_) => continue,
            };
            ok += 1;
            let ev = |e: &Expr| e.eval(&b).unwrap_or(0.0);
            let dxm = ev(&d2[0]);
            for k in 1..3 {
                let through = if dxm != 0.0 { -ev(&d2[k]) / dxm } else { 0.0 };
                let total = ev(&df[k]) + ev(&df[0]) * through;
                if total.abs() > 1e-12 {
                    genuine = true;
                }
            }
        }
        if ok == 0 {
            return Err(Error::IncompatibleSampling {
                failed: 200,
                total: 200,
            });
        }
        if !genuine {
            return Err(Error::InvalidSystem(
                "f does not depend on the delayed quantities ym, dym".into(),
            ));
        }
        Ok(())
    }

    /// Serializes into the key-value text format accepted by `from_str`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "f = {}", self.f);
        let _ = writeln!(s, "g = {}", self.g);
        for (k, v) in self.params.params() {
            let _ = writeln!(s, "param {k} = {v}");
        }
        let _ = writeln!(s, "delay = {}", self.delay_kind.name());
        if self.domain.0.is_finite() || self.domain.1.is_finite() {
            let _ = writeln!(s, "domain = {},{}", self.domain.0, self.domain.1);
        }
        let default = SampleBox::default();
        for ((name, r), (_, d)) in self.sample_box.ranges().into_iter().zip(default.ranges()) {
            if r != d {
                let _ = writeln!(s, "sample {name} = {},{}", r.0, r.1);
            }
        }
        s
    }
}

pub(crate) fn parse_pair(text: &str) -> Option<(f64, f64)> {
    let (a, b) = text.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

impl FromStr for DodsSystem {
    type Err = Error;

    /// Line format: `f = <expr>`, `g = <expr>`, `param <name> = <value>`,
    /// `delay = constant|independent|state`, `domain = a,b`,
    /// `sample <coord> = lo,hi`. `#` starts a comment.
    fn from_str(text: &str) -> Result<Self> {
        let mut f = None;
        let mut g = None;
        let mut params = Bindings::new();
        let mut kind = None;
        let mut domain = None;
        let mut sbox = SampleBox::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Format { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let mut words = key.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("f"), None, _) => f = Some(value.parse::<Expr>().map_err(|e| bad(e.to_string()))?),
                (Some("g"), None, _) => g = Some(value.parse::<Expr>().map_err(|e| bad(e.to_string()))?),
                (Some("param"), Some(name), None) => {
                    if Var::from_name(name).is_some() {
                        return Err(bad(format!("`{name}` is a reserved variable name")));
                    }
                    let v = value
                        .parse::<Expr>()
                        .ok()
                        .and_then(|e| e.eval(&params).ok())
                        .ok_or_else(|| bad(format!("invalid parameter value `{value}`")))?;
                    params.set(name, v);
                }
                (Some("delay"), None, _) => {
                    kind = Some(
                        DelayKind::from_name(value)
                            .ok_or_else(|| bad(format!("unknown delay kind `{value}`")))?,
                    )
                }
                (Some("domain"), None, _) => {
                    domain = Some(parse_pair(value).ok_or_else(|| bad(format!("invalid interval `{value}`")))?)
                }
                (Some("sample"), Some(coord), None) => {
                    let r = parse_pair(value).ok_or_else(|| bad(format!("invalid range `{value}`")))?;
                    if !sbox.set(coord, r) {
                        return Err(bad(format!("unknown sampling coordinate `{coord}`")));
                    }
                }
                _ => return Err(bad(format!("unknown key `{key}`"))),
            }
        }
        let f = f.ok_or(Error::Format {
            line: 0,
            msg: "missing `f`".into(),
        })?;
        let g = g.ok_or(Error::Format {
            line: 0,
            msg: "missing `g`".into(),
        })?;
        let mut sys = DodsSystem::new(f, g, params)?;
        if let Some(k) = kind {
            sys.delay_kind = k;
        }
        if let Some(d) = domain {
            sys.domain = d;
        }
        sys.sample_box = sbox;
        Ok(sys)
    }
}

/// `pr X (phi)` at a point binding all seven jet coordinates.
pub fn apply_prolonged(p: &ProlongedField, phi: &Expr, point: &Bindings) -> Result<f64> {
    p.apply(phi, point)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub field: String,
    pub max_residual_dode: f64,
    pub max_residual_delay: f64,
    pub n_samples: usize,
    pub failed_samples: usize,
    pub worst_point: [f64; 7],
}

/// Acceptance threshold for both residuals.
pub const INVARIANCE_TOL: f64 = 1e-8;

impl InvarianceReport {
    pub fn max_residual(&self) -> f64 {
        self.max_residual_dode.max(self.max_residual_delay)
    }

    pub fn passes(&self) -> bool {
        self.passes_at(INVARIANCE_TOL)
    }

    pub fn passes_at(&self, tol: f64) -> bool {
        self.max_residual_dode < tol && self.max_residual_delay < tol
    }
}

fn jet_tuple(b: &Bindings) -> [f64; 7] {
    Var::JET.map(|v| b.var(v).unwrap_or(f64::NAN))
}

/// Prolonged field applied to both defining relations at `n` manifold points.
pub fn check_invariance(s: &DodsSystem, x: &VectorField, n: usize) -> Result<InvarianceReport> {
    check_invariance_seeded(s, x, n, sampling::DEFAULT_SEED)
}

pub fn check_invariance_seeded(
    s: &DodsSystem,
    field: &VectorField,
    n: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    let points = manifold_samples(s, n, seed)?;
    invariance_on(s, field, &points.0, points.1)
}

/// Draws up to `2n` candidates and keeps the first `n` that land on the
/// manifold; fails when more than half of the draws are rejected.
pub fn manifold_samples(s: &DodsSystem, n: usize, seed: u64) -> Result<(Vec<Bindings>, usize)> {
    let n = n.max(1);
    let mut rng = sampling::rng(seed);
    let mut pts = Vec::with_capacity(n);
    let mut failed = 0;
    while pts.len() < n {
        if failed > n {
            return Err(Error::IncompatibleSampling {
                failed,
                total: failed + pts.len(),
            });
        }
        match s.manifold_point(s.sample_box.draw(&mut rng)) {
            Ok(b) => pts.push(b),
            Err(_) => failed += 1,
        }
    }
    Ok((pts, failed))
}

/// Invariance residuals at precomputed manifold points.
pub fn invariance_on(
    s: &DodsSystem,
    field: &VectorField,
    points: &[Bindings],
    failed: usize,
) -> Result<InvarianceReport> {
    let p = field.prolong();
    let g1 = jet_gradient(&s.phi_dode());
    let g2 = jet_gradient(&s.phi_delay());
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    let mut worst = 0.0f64;
    let mut worst_point = [f64::NAN; 7];
    let mut bad = failed;
    let mut used = 0;
    for b in points {
        let (a1, a2) = match (p.apply_gradient(&g1, b), p.apply_gradient(&g2, b)) {
            (Ok(a1), Ok(a2)) => (a1.abs(), a2.abs()),
            _ => {
                bad += 1;
                continue;
            }
        };
        used += 1;
        r1 = r1.max(a1);
        r2 = r2.max(a2);
        if a1.max(a2) >= worst {
            worst = a1.max(a2);
            worst_point = jet_tuple(b);
        }
    }
    if used == 0 || bad > used {
        return Err(Error::IncompatibleSampling {
            failed: bad,
            total: bad + used,
        });
    }
    Ok(InvarianceReport {
        field: field.label.clone(),
        max_residual_dode: r1,
        max_residual_delay: r2,
        n_samples: used,
        failed_samples: bad,
        worst_point,
    })
}

/// [`check_invariance`] for each basis field, sharing one set of samples.
pub fn check_algebra(s: &DodsSystem, fields: &[VectorField], n: usize) -> Result<Vec<InvarianceReport>> {
    check_algebra_seeded(s, fields, n, sampling::DEFAULT_SEED)
}

pub fn check_algebra_seeded(
    s: &DodsSystem,
    fields: &[VectorField],
    n: usize,
    seed: u64,
) -> Result<Vec<InvarianceReport>> {
    let (points, failed) = manifold_samples(s, n, seed)?;
    fields
        .iter()
        .map(|f| invariance_on(s, f, &points, failed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::jet;

    fn vf(xi: &str, eta: &str) -> VectorField {
        VectorField::parse(xi, eta).unwrap()
    }

    fn point() -> Bindings {
        let mut b = Bindings::new();
        for (v, val) in Var::JET.iter().zip([2.0, 1.5, 1.0, 0.7, 0.3, -0.4, 0.9]) {
            b.set_var(*v, val);
        }
        b
    }

    #[test]
    fn apply_prolonged_examples() {
        let b = point();
        let r = apply_prolonged(&vf("0", "1").prolong(), &jet::delta_y(), &b).unwrap();
        assert_eq!(r, 0.0);
        let r = apply_prolonged(&vf("1", "0").prolong(), &jet::delta_x(), &b).unwrap();
        assert_eq!(r, 0.0);
        let r = apply_prolonged(&vf("0", "y").prolong(), &jet::x(), &b).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn translation_invariant_system() {
        let s = DodsSystem::parse("(y - ym)*sin(dy) + dym", "x - (1 + dy^2)", Bindings::new()).unwrap();
        s.validate().unwrap();
        for f in [vf("0", "1"), vf("1", "0")] {
            let r = check_invariance(&s, &f, 100).unwrap();
            assert!(r.max_residual() < 1e-10, "{r:?}");
        }
        let r = check_invariance(&s, &vf("0", "x"), 100).unwrap();
        assert!(!r.passes());
    }

    #[test]
    fn inhomogeneous_term_breaks_scaling() {
        let s = DodsSystem::parse("y - ym + 1", "x - 1", Bindings::new()).unwrap();
        let r = check_invariance(&s, &vf("0", "y"), 50).unwrap();
        assert!((r.max_residual_dode - 1.0).abs() < 1e-12, "{r:?}");
        assert_eq!(s.delay_kind, DelayKind::Constant);
    }

    #[test]
    fn implicit_delay_relation() {
        // x - xm = 1.2 / (dy + dym - 2 (y - ym)/(x - xm))
        let s = DodsSystem::parse(
            "2*(dy - (y-ym)/(x-xm))/(x-xm) + 0.3/(x-xm)^2",
            "x - 1.2/(dy + dym - 2*(y-ym)/(x-xm))",
            Bindings::new(),
        )
        .unwrap();
        assert!(s.is_implicit());
        let b = s.manifold_point([1.0, 1.0, 0.5, 1.0, 1.0]).unwrap();
        let r = s.phi_delay().eval(&b).unwrap();
        assert!(r.abs() < 1e-9);
    }

    #[test]
    fn rejects_non_delay_systems() {
        let s = DodsSystem::parse("y + dy", "x - 1", Bindings::new()).unwrap();
        assert!(s.validate().is_err());
        let s = DodsSystem::parse("ym", "x + 1", Bindings::new()).unwrap();
        assert!(s.validate().is_err());
        assert!(DodsSystem::parse("ddy", "x - 1", Bindings::new()).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let src = "# two-car system\nf = a*dy*(1 - dym)/(x - ym)\ng = x - tau\nparam a = 1.5\nparam tau = 0.5\ndelay = constant\ndomain = 0,10\nsample y = 0,0.1\n";
        let s: DodsSystem = src.parse().unwrap();
        assert_eq!(s.params.param("tau"), Some(0.5));
        assert_eq!(s.domain, (0.0, 10.0));
        assert_eq!(s.sample_box.y, (0.0, 0.1));
        let back: DodsSystem = s.to_text().parse().unwrap();
        assert_eq!(back.f, s.f);
        assert_eq!(back.g, s.g);
        assert_eq!(back.params, s.params);
        assert!(matches!(
            "f = y\ng = x-1\ncolour = red".parse::<DodsSystem>(),
            Err(Error::Format { line: 3, .. })
        ));
    }
}
