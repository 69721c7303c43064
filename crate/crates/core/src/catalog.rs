//! Catalog of second-order delay systems classified by their Lie point
//! symmetry algebras.
//!
//! Each entry carries a basis of point fields, a template DODS in which the
//! arbitrary functions appear as the parameters `F` and `G`, the invariant
//! slots `u1, u2, ...` those functions may depend on, and default choices of
//! `F` and `G` used for numerical checks. Templates use the shorthands
//! `DX = x - xm`, `DY = y - ym` and `YX = DY / DX`.

use std::fmt::{self, Write as _};
use std::sync::OnceLock;

use crate::dods::{self, DodsSystem, InvarianceReport};
use crate::error::{Error, Result};
use crate::expr::{jet, Bindings, Expr, Subst, Var};
use crate::sampling::SampleBox;
use crate::symmetry::{self, StructureConstants, VectorField};
use crate::traffic::{self, TrafficParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryKind {
    /// Nonlinear system with arbitrary functions or fixed constants.
    Nonlinear,
    /// Linear system in `y`, written through determinants of solutions.
    Linear,
    /// Family label for linear systems; no single template.
    Marker,
    /// Two-car follow-the-leader system from one of the traffic examples.
    Traffic,
}

impl EntryKind {
    pub fn name(self) -> &'static str {
        match self {
            EntryKind::Nonlinear => "nonlinear",
            EntryKind::Linear => "linear",
            EntryKind::Marker => "marker",
            EntryKind::Traffic => "traffic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            EntryKind::Nonlinear,
            EntryKind::Linear,
            EntryKind::Marker,
            EntryKind::Traffic,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

/// Admissibility condition on one entry parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    NonZero(String),
    Positive(String),
    /// `lo < p < hi`
    OpenInterval(String, f64, f64),
    /// `lo < |p| <= hi`
    AbsInHalfOpen(String, f64, f64),
    NotIn(String, Vec<f64>),
}

impl Constraint {
    fn name(&self) -> &str {
        match self {
            Constraint::NonZero(p)
            | Constraint::Positive(p)
            | Constraint::OpenInterval(p, ..)
            | Constraint::AbsInHalfOpen(p, ..)
            | Constraint::NotIn(p, _) => p,
        }
    }

    pub fn holds(&self, v: f64) -> bool {
        match self {
            Constraint::NonZero(_) => v != 0.0,
            Constraint::Positive(_) => v > 0.0,
            Constraint::OpenInterval(_, lo, hi) => *lo < v && v < *hi,
            Constraint::AbsInHalfOpen(_, lo, hi) => *lo < v.abs() && v.abs() <= *hi,
            Constraint::NotIn(_, bad) => !bad.contains(&v),
        }
    }

    fn parse(text: &str) -> Option<Self> {
        let w: Vec<&str> = text.split_whitespace().collect();
        let num = |i: usize| w.get(i).and_then(|s| s.parse::<f64>().ok());
        let p = w.get(1)?.to_string();
        match (w[0], w.len()) {
            ("nonzero", 2) => Some(Constraint::NonZero(p)),
            ("positive", 2) => Some(Constraint::Positive(p)),
            ("interval", 4) => Some(Constraint::OpenInterval(p, num(2)?, num(3)?)),
            ("abs", 4) => Some(Constraint::AbsInHalfOpen(p, num(2)?, num(3)?)),
            ("notin", n) if n > 2 => {
                let vals: Option<Vec<f64>> = (2..n).map(num).collect();
                Some(Constraint::NotIn(p, vals?))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::NonZero(p) => write!(f, "nonzero {p}"),
            Constraint::Positive(p) => write!(f, "positive {p}"),
            Constraint::OpenInterval(p, lo, hi) => write!(f, "interval {p} {lo} {hi}"),
            Constraint::AbsInHalfOpen(p, lo, hi) => write!(f, "abs {p} {lo} {hi}"),
            Constraint::NotIn(p, vals) => {
                write!(f, "notin {p}")?;
                for v in vals {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub id: String,
    pub algebra: String,
    pub kind: EntryKind,
    pub basis: Vec<VectorField>,
    /// Invariants `u1, u2, ...` available to `F` and `G`.
    pub slots: Vec<Expr>,
    /// `ddy = dode`, with `F` standing for the arbitrary function.
    pub dode: Expr,
    /// `xm = delay`, with `G` standing for the arbitrary function.
    pub delay: Expr,
    pub default_f: Expr,
    pub default_g: Expr,
    pub params: Bindings,
    pub constraints: Vec<Constraint>,
    pub sample_box: SampleBox,
    pub notes: String,
    /// Traffic example number for [`EntryKind::Traffic`] entries.
    pub traffic: Option<u8>,
}

fn slot_name(i: usize) -> String {
    format!("u{}", i + 1)
}

impl CatalogEntry {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn has_arbitrary_functions(&self) -> bool {
        !self.slots.is_empty()
    }

    /// Substitutes `u_i` by the slot invariants.
    fn expand_function(&self, which: &str, h: &Expr) -> Result<Expr> {
        if let Some(v) = h.vars().into_iter().next() {
            return Err(Error::InvalidSystem(format!(
                "{which} must be written in the slots u1..u{}, not `{v}`",
                self.slots.len()
            )));
        }
        let mut s = Subst::new();
        for (i, e) in self.slots.iter().enumerate() {
            s = s.param(&slot_name(i), e.clone());
        }
        let allowed: Vec<String> = (0..self.slots.len()).map(slot_name).collect();
        if let Some(p) = h
            .params()
            .into_iter()
            .find(|p| !allowed.contains(p) && self.params.param(p).is_none())
        {
            return Err(Error::InvalidSystem(format!(
                "{which} uses `{p}`, which is neither a slot nor an entry parameter"
            )));
        }
        Ok(h.subst(&s))
    }

    fn merged_params(&self, overrides: &Bindings) -> Result<Bindings> {
        let mut b = self.params.clone();
        for (k, v) in overrides.params() {
            if self.params.param(k).is_none() {
                return Err(Error::InvalidParams(format!("entry {} has no parameter `{k}`", self.id)));
            }
            b.set(k, v);
        }
        for c in &self.constraints {
            let v = b.param(c.name()).unwrap_or(f64::NAN);
            if !c.holds(v) {
                return Err(Error::InvalidParams(format!("{} = {v} violates `{c}`", c.name())));
            }
        }
        Ok(b)
    }

    /// The entry's DODS for the given `F`, `G` (defaults when `None`) and
    /// parameter overrides, validated for genuineness and `xm < x`.
    pub fn instantiate(&self, f: Option<&Expr>, g: Option<&Expr>, params: &Bindings) -> Result<DodsSystem> {
        match self.kind {
            EntryKind::Marker => {
                return Err(Error::InvalidSystem(format!(
                    "{} labels a family of linear systems and has no single template",
                    self.id
                )))
            }
            EntryKind::Traffic => {
                let id = self.traffic.unwrap_or(1);
                if f.is_some() || g.is_some() || params.params().next().is_some() {
                    return Err(Error::InvalidSystem(format!("{} has no arbitrary functions", self.id)));
                }
                return traffic::build_two_car(&TrafficParams::example(id)?);
            }
            _ => {}
        }
        if !self.has_arbitrary_functions() && (f.is_some() || g.is_some()) {
            return Err(Error::InvalidSystem(format!("{} has no arbitrary functions", self.id)));
        }
        let bound = self.merged_params(params)?;
        let fe = self.expand_function("F", f.unwrap_or(&self.default_f))?;
        let ge = self.expand_function("G", g.unwrap_or(&self.default_g))?;
        let dode = self.dode.subst_param("F", &fe);
        let delay = self.delay.subst_param("G", &ge);
        let s = DodsSystem::new(dode, delay, bound)?.with_box(self.sample_box);
        s.validate()?;
        Ok(s)
    }

    pub fn default_system(&self) -> Result<DodsSystem> {
        self.instantiate(None, None, &Bindings::new())
    }

    /// The basis with entry parameters taken from `params` where given.
    pub fn bound_basis(&self, params: &Bindings) -> Vec<VectorField> {
        let mut b = self.params.clone();
        b.extend(params);
        self.basis.iter().map(|f| f.bind_params(&b)).collect()
    }

    /// A field that is not a symmetry: the first basis field with an extra
    /// term in `eta` that leaves the span of the basis.
    pub fn negative_control(&self) -> Result<VectorField> {
        let first = self
            .basis
            .first()
            .ok_or_else(|| Error::InvalidField(format!("{} has an empty basis", self.id)))?;
        for extra in ["0.1*x^2", "0.1*x^2*y", "0.1*y^3", "0.1*x*y^2"] {
            let e: Expr = extra.parse()?;
            let cand = VectorField::new(first.xi.clone(), first.eta.clone() + e)?
                .with_label(format!("{} + {extra}∂y", first.label));
            let (_, res) = symmetry::span_coefficients(&self.basis, &cand, &self.params, 7)?;
            if res > 1e-6 {
                return Ok(cand);
            }
        }
        Err(Error::InvalidField(format!("no out-of-span perturbation for {}", self.id)))
    }

    fn write_text(&self, s: &mut String) {
        let _ = writeln!(s, "[entry {}]", self.id);
        let _ = writeln!(s, "algebra = {}", self.algebra);
        let _ = writeln!(s, "kind = {}", self.kind.name());
        if let Some(t) = self.traffic {
            let _ = writeln!(s, "traffic = {t}");
        }
        for f in &self.basis {
            let _ = writeln!(s, "field = {} ; {} @ {}", f.xi, f.eta, f.label);
        }
        for (k, v) in self.params.params() {
            let _ = writeln!(s, "param {k} = {v}");
        }
        for c in &self.constraints {
            let _ = writeln!(s, "constraint = {c}");
        }
        for (i, e) in self.slots.iter().enumerate() {
            let _ = writeln!(s, "slot {} = {e}", slot_name(i));
        }
        let _ = writeln!(s, "dode = {}", self.dode);
        let _ = writeln!(s, "delay = {}", self.delay);
        if self.has_arbitrary_functions() {
            let _ = writeln!(s, "default F = {}", self.default_f);
            let _ = writeln!(s, "default G = {}", self.default_g);
        }
        let default = SampleBox::default();
        for ((name, r), (_, d)) in self.sample_box.ranges().into_iter().zip(default.ranges()) {
            if r != d {
                let _ = writeln!(s, "sample {name} = {},{}", r.0, r.1);
            }
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "notes = {}", self.notes);
        }
        let _ = writeln!(s, "[end]");
    }
}

impl fmt::Display for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}  algebra {}  ({}, dim {})", self.id, self.algebra, self.kind.name(), self.dim())?;
        for (i, x) in self.basis.iter().enumerate() {
            writeln!(f, "  X{} = {}", i + 1, x.label)?;
        }
        for (k, v) in self.params.params() {
            writeln!(f, "  {k} = {v}")?;
        }
        for c in &self.constraints {
            writeln!(f, "  require {c}")?;
        }
        for (i, e) in self.slots.iter().enumerate() {
            writeln!(f, "  {} = {e}", slot_name(i))?;
        }
        writeln!(f, "  ddy = {}", self.dode)?;
        writeln!(f, "  xm  = {}", self.delay)?;
        if self.has_arbitrary_functions() {
            writeln!(f, "  default F = {}", self.default_f)?;
            writeln!(f, "  default G = {}", self.default_g)?;
        }
        if !self.notes.is_empty() {
            writeln!(f, "  {}", self.notes)?;
        }
        Ok(())
    }
}

/// Result of [`check_entry`].
#[derive(Clone, Debug)]
pub struct EntryCheck {
    pub id: String,
    pub invariance: Vec<InvarianceReport>,
    pub closure: Option<StructureConstants>,
    pub jacobi: f64,
    pub negative_control: f64,
}

impl EntryCheck {
    pub fn max_invariance(&self) -> f64 {
        self.invariance.iter().map(|r| r.max_residual()).fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.invariance.iter().all(|r| r.passes()) && self.jacobi < 1e-9 && self.negative_control > 1e-3
    }
}

/// Invariance of every basis field at `n` manifold samples of the default
/// system, closure, Jacobi identity and the negative control.
pub fn check_entry(e: &CatalogEntry, n: usize, seed: u64) -> Result<EntryCheck> {
    let s = e.default_system()?;
    let invariance = dods::check_algebra_seeded(&s, &e.basis, n, seed)?;
    let closure = if e.dim() >= 2 {
        Some(symmetry::check_closure_seeded(&e.basis, &s.params, seed)?)
    } else {
        None
    };
    let mut jacobi = 0.0f64;
    let k = e.dim();
    for a in 0..k {
        for b in (a + 1)..k {
            for c in (b + 1)..k {
                let r = symmetry::jacobi_residual(&e.basis[a], &e.basis[b], &e.basis[c], &s.params, 10, seed)?;
                jacobi = jacobi.max(r);
            }
        }
    }
    let neg = e.negative_control()?;
    let negative_control = dods::check_invariance_seeded(&s, &neg, n, seed)?.max_residual();
    Ok(EntryCheck {
        id: e.id.clone(),
        invariance,
        closure,
        jacobi,
        negative_control,
    })
}

/// All entries, in table order.
pub fn entries() -> &'static [CatalogEntry] {
    static CATALOG: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    CATALOG.get_or_init(build)
}

/// One line per entry: id, algebra, dimension, kind.
pub fn list_entries() -> Vec<String> {
    entries()
        .iter()
        .map(|e| format!("{:<12} {:<20} dim {}  {}", e.id, e.algebra, e.dim(), e.kind.name()))
        .collect()
}

pub fn get(id: &str) -> Result<&'static CatalogEntry> {
    entries()
        .iter()
        .find(|e| e.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::UnknownEntry(id.to_string()))
}

/// Serialized catalog in `[entry ID] ... [end]` blocks.
pub fn export() -> String {
    export_entries(entries())
}

pub fn export_entries(list: &[CatalogEntry]) -> String {
    let mut s = String::new();
    for e in list {
        e.write_text(&mut s);
        s.push('\n');
    }
    s
}

/// Parses the output of [`export`].
pub fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>> {
    let mut out = Vec::new();
    let mut cur: Option<CatalogEntry> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let bad = |msg: String| Error::Format { line: line_no, msg };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(id) = line.strip_prefix("[entry ").and_then(|r| r.strip_suffix(']')) {
            if cur.is_some() {
                return Err(bad("nested `[entry`".into()));
            }
            cur = Some(blank(id.trim()));
            continue;
        }
        if line == "[end]" {
            out.push(cur.take().ok_or_else(|| bad("`[end]` without `[entry`".into()))?);
            continue;
        }
        let e = cur.as_mut().ok_or_else(|| bad(format!("`{line}` outside an entry block")))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let expr = |v: &str| v.parse::<Expr>().map_err(|err| bad(err.to_string()));
        let mut words = key.split_whitespace();
        match (words.next(), words.next()) {
            (Some("algebra"), None) => e.algebra = value.to_string(),
            (Some("kind"), None) => {
                e.kind = EntryKind::from_name(value).ok_or_else(|| bad(format!("unknown kind `{value}`")))?
            }
            (Some("traffic"), None) => {
                e.traffic = Some(value.parse().map_err(|_| bad(format!("invalid example `{value}`")))?)
            }
            (Some("field"), None) => {
                let (pair, label) = value.split_once('@').unwrap_or((value, ""));
                let f = VectorField::parse_pair(pair).map_err(|err| bad(err.to_string()))?;
                let label = label.trim();
                e.basis.push(if label.is_empty() { f } else { f.with_label(label) });
            }
            (Some("param"), Some(name)) => {
                let v = value.parse().map_err(|_| bad(format!("invalid value `{value}`")))?;
                e.params.set(name, v);
            }
            (Some("constraint"), None) => e
                .constraints
                .push(Constraint::parse(value).ok_or_else(|| bad(format!("invalid constraint `{value}`")))?),
            (Some("slot"), Some(_)) => e.slots.push(expr(value)?),
            (Some("dode"), None) => e.dode = expr(value)?,
            (Some("delay"), None) => e.delay = expr(value)?,
            (Some("default"), Some("F")) => e.default_f = expr(value)?,
            (Some("default"), Some("G")) => e.default_g = expr(value)?,
            (Some("sample"), Some(coord)) => {
                let r = dods::parse_pair(value).ok_or_else(|| bad(format!("invalid range `{value}`")))?;
                if !e.sample_box.set(coord, r) {
                    return Err(bad(format!("unknown sampling coordinate `{coord}`")));
                }
            }
            (Some("notes"), None) => e.notes = value.to_string(),
            _ => return Err(bad(format!("unknown key `{key}`"))),
        }
    }
    if cur.is_some() {
        return Err(Error::Format {
            line: text.lines().count(),
            msg: "unterminated entry block".into(),
        });
    }
    Ok(out)
}

fn blank(id: &str) -> CatalogEntry {
    CatalogEntry {
        id: id.to_string(),
        algebra: String::new(),
        kind: EntryKind::Nonlinear,
        basis: Vec::new(),
        slots: Vec::new(),
        dode: Expr::num(0.0),
        delay: Expr::num(0.0),
        default_f: Expr::num(0.0),
        default_g: Expr::num(0.0),
        params: Bindings::new(),
        constraints: Vec::new(),
        sample_box: SampleBox::default(),
        notes: String::new(),
        traffic: None,
    }
}

/// Replaces the `DX`, `DY`, `YX` shorthands.
fn expand(text: &str) -> Expr {
    let e: Expr = text
        .parse()
        .unwrap_or_else(|err| panic!("catalog template `{text}`: {err}"));
    let s = Subst::new()
        .param("DX", jet::delta_x())
        .param("DY", jet::delta_y())
        .param("YX", jet::slope());
    e.subst(&s)
}

struct Spec<'a> {
    id: &'a str,
    algebra: &'a str,
    basis: &'a [(&'a str, &'a str, &'a str)],
    slots: &'a [&'a str],
    dode: &'a str,
    delay: &'a str,
    f: &'a str,
    g: &'a str,
    params: &'a [(&'a str, f64)],
    sample: &'a [(&'a str, (f64, f64))],
}

const BASE: Spec<'static> = Spec {
    id: "",
    algebra: "",
    basis: &[],
    slots: &[],
    dode: "0",
    delay: "0",
    f: "0",
    g: "0",
    params: &[],
    sample: &[],
};

const POS_DY: &[(&str, (f64, f64))] = &[("y", (1.5, 2.5)), ("ym", (0.5, 1.4))];

fn from_spec(s: Spec<'_>) -> CatalogEntry {
    let mut e = blank(s.id);
    e.algebra = s.algebra.to_string();
    e.basis = s
        .basis
        .iter()
        .map(|(xi, eta, label)| {
            VectorField::parse(xi, eta)
                .unwrap_or_else(|err| panic!("catalog field {xi};{eta}: {err}"))
                .with_label(*label)
        })
        .collect();
    e.slots = s.slots.iter().map(|t| expand(t)).collect();
    e.dode = expand(s.dode);
    e.delay = expand(s.delay);
    e.default_f = expand(s.f);
    e.default_g = expand(s.g);
    for (k, v) in s.params {
        e.params.set(k, *v);
    }
    for (k, r) in s.sample {
        e.sample_box.set(k, *r);
    }
    e
}

/// Laplace expansion along the first row.
fn det(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = Expr::num(0.0);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Expr>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, e)| e.clone()).collect())
            .collect();
        let term = m[0][j].clone() * det(&minor);
        acc = if j % 2 == 0 { acc + term } else { acc - term };
    }
    acc.simplify()
}

/// `ddy` from `det M = rhs`, where `M` is linear in `ddy` through its first
/// row.
fn solve_det_for_ddy(det_m: &Expr, rhs: &Expr) -> Expr {
    let c = det_m.diff_simplified(Var::Ddy);
    let d = det_m.subst_var(Var::Ddy, &Expr::num(0.0)).simplify();
    ((rhs.clone() - d) / c).simplify()
}

fn row(items: &[&str]) -> Vec<Expr> {
    items.iter().map(|t| expand(t)).collect()
}

/// Solution rows `(chi'', chi', chi'(xm), chi, chi(xm))` without the
/// columns listed in `skip`.
fn solution_row(chi: &str, d1: &str, d2: &str, skip_dym: bool, with_ddy: bool) -> Vec<Expr> {
    let chi_e = expand(chi);
    let at_xm = |e: Expr| e.subst_var(Var::X, &jet::xm());
    let d1e = expand(d1);
    let mut out = Vec::new();
    if with_ddy {
        out.push(expand(d2));
    }
    out.push(d1e.clone());
    if !skip_dym {
        out.push(at_xm(d1e));
    }
    out.push(chi_e.clone());
    out.push(at_xm(chi_e));
    out
}

fn h3_entry() -> CatalogEntry {
    let m1 = vec![
        row(&["ddy", "dy", "y", "ym"]),
        row(&["0", "0", "1", "1"]),
        row(&["0", "1", "x", "xm"]),
        solution_row("exp(x)", "exp(x)", "exp(x)", true, true),
    ];
    let m2 = vec![
        row(&["dy", "dym", "y", "ym"]),
        row(&["0", "0", "1", "1"]),
        row(&["1", "1", "x", "xm"]),
        solution_row("exp(x)", "exp(x)", "exp(x)", false, false),
    ];
    let mut e = from_spec(Spec {
        id: "A4_5",
        algebra: "s_{4,3}",
        basis: &[
            ("0", "1", "∂y"),
            ("0", "x", "x∂y"),
            ("0", "exp(x)", "e^x∂y"),
            ("0", "y", "y∂y"),
        ],
        slots: &["x"],
        delay: "G",
        f: "0.5",
        g: "u1 - 1",
        ..BASE
    });
    e.kind = EntryKind::Linear;
    e.dode = solve_det_for_ddy(&det(&m1), &(Expr::param("F") * det(&m2)));
    e.notes = "linear family H3: det M1 = F(x) det M2 with solutions 1, x, e^x".into();
    e
}

fn s3_entry() -> CatalogEntry {
    let m = vec![
        row(&["ddy", "dy", "dym", "y", "ym"]),
        row(&["0", "0", "0", "1", "1"]),
        row(&["0", "1", "1", "x", "xm"]),
        solution_row("exp(x)", "exp(x)", "exp(x)", false, true),
        solution_row("exp(-x)", "-exp(-x)", "exp(-x)", false, true),
    ];
    let mut e = from_spec(Spec {
        id: "A4_22",
        algebra: "4n_{1,1}",
        basis: &[
            ("0", "1", "∂y"),
            ("0", "x", "x∂y"),
            ("0", "exp(x)", "e^x∂y"),
            ("0", "exp(-x)", "e^{-x}∂y"),
        ],
        slots: &["x"],
        delay: "G",
        f: "0.5",
        g: "u1 - 1",
        ..BASE
    });
    e.kind = EntryKind::Linear;
    e.dode = solve_det_for_ddy(&det(&m), &Expr::param("F"));
    e.notes = "linear family S3: det M = F(x) with solutions 1, x, e^x, e^-x".into();
    e
}

fn marker(id: &str, notes: &str) -> CatalogEntry {
    let mut e = blank(id);
    e.algebra = "varies".into();
    e.kind = EntryKind::Marker;
    e.notes = notes.to_string();
    e
}

fn traffic_entry(id: u8) -> CatalogEntry {
    let p = TrafficParams::example(id).expect("built-in traffic example");
    let s = traffic::build_two_car(&p).expect("built-in traffic system");
    let basis = if id == 2 {
        traffic::example2_algebra(&p).expect("example 2 algebra")
    } else {
        vec![traffic::example_symmetry(&p).expect("example symmetry")]
    };
    let mut e = blank(&format!("TRAFFIC_EX{id}"));
    e.algebra = if basis.len() == 1 { "n_{1,1}".into() } else { format!("{}-dimensional", basis.len()) };
    e.kind = EntryKind::Traffic;
    e.basis = basis;
    e.dode = s.f.bind_params(&s.params);
    e.delay = s.g.bind_params(&s.params);
    e.sample_box = s.sample_box;
    e.traffic = Some(id);
    e.notes = "two-car follow-the-leader system; x is time, y the follower position".into();
    e
}

fn build() -> Vec<CatalogEntry> {
    let mut v = vec![
        from_spec(Spec {
            id: "A1_1",
            algebra: "n_{1,1}",
            basis: &[("0", "1", "∂y")],
            slots: &["x", "DY", "dy", "dym"],
            dode: "F",
            delay: "G",
            f: "u2 + u3*u4",
            g: "u1 - 1 - 0.1*u3^2",
            ..BASE
        }),
        from_spec(Spec {
            id: "A2_1",
            algebra: "s_{2,1}",
            basis: &[("0", "1", "∂y"), ("0", "y", "y∂y")],
            slots: &["x", "dy/DY", "dym/DY"],
            dode: "dy*F",
            delay: "G",
            f: "u2 - u3",
            g: "u1 - 1/(1 + u2^2)",
            sample: &[("y", (2.0, 3.0)), ("ym", (0.5, 1.5))],
            ..BASE
        }),
        from_spec(Spec {
            id: "A2_2",
            algebra: "s_{2,1}",
            basis: &[("0", "1", "∂y"), ("x", "y", "x∂x + y∂y")],
            slots: &["YX", "dy", "dym"],
            dode: "F/x",
            delay: "x*G",
            f: "u1 + u2*u3",
            g: "1/(2 + u2^2)",
            ..BASE
        }),
        from_spec(Spec {
            id: "A2_3",
            algebra: "2n_{1,1}",
            basis: &[("0", "1", "∂y"), ("0", "x", "x∂y")],
            slots: &["x", "dy - YX", "dy - dym"],
            dode: "F",
            delay: "G",
            f: "u1*u3 + u2",
            g: "u1 - 1 - 0.1*u3^2",
            ..BASE
        }),
        from_spec(Spec {
            id: "A2_4",
            algebra: "2n_{1,1}",
            basis: &[("1", "0", "∂x"), ("0", "1", "∂y")],
            slots: &["DY", "dy", "dym"],
            dode: "F",
            delay: "x - G",
            f: "u1*sin(u2) + u3",
            g: "1 + u2^2",
            ..BASE
        }),
        from_spec(Spec {
            id: "A3_1",
            algebra: "n_{3,1}",
            basis: &[("0", "1", "∂y"), ("0", "x", "x∂y"), ("1", "0", "∂x")],
            slots: &["dy - YX", "dy - dym"],
            dode: "F",
            delay: "x - G",
            f: "u1*u2 + u1",
            g: "1 + u2^2",
            ..BASE
        }),
        {
            let mut e = from_spec(Spec {
                id: "A3_2a",
                algebra: "s_{3,1}",
                basis: &[("1", "0", "∂x"), ("0", "1", "∂y"), ("x", "a*y", "x∂x + a y∂y")],
                slots: &["dy/abs(DX)^(a - 1)", "dym/abs(DX)^(a - 1)"],
                dode: "abs(DX)^(a - 2)*F",
                delay: "x - abs(DY)^(1/a)*G",
                f: "u1 + u2^2",
                g: "1.5",
                params: &[("a", 0.5)],
                sample: &[("y", (1.6, 2.5)), ("ym", (0.5, 1.2))],
            });
            e.constraints.push(Constraint::AbsInHalfOpen("a".into(), 0.0, 1.0));
            e
        },
        from_spec(Spec {
            id: "A3_4",
            algebra: "s_{3,2}",
            basis: &[("1", "0", "∂x"), ("0", "1", "∂y"), ("x", "x + y", "x∂x + (x + y)∂y")],
            slots: &["dy - YX", "dy - dym"],
            dode: "F/DX",
            delay: "x - exp(YX)*G",
            f: "u1 + u2",
            g: "0.5",
            sample: &[("y", (1.2, 1.6)), ("ym", (0.8, 1.1))],
            ..BASE
        }),
        from_spec(Spec {
            id: "A3_5",
            algebra: "s_{3,2}",
            basis: &[("0", "1", "∂y"), ("0", "x", "x∂y"), ("1", "y", "∂x + y∂y")],
            slots: &["exp(-x)*(dy - YX)", "exp(-x)*(dy - dym)"],
            dode: "exp(x)*F",
            delay: "x - G",
            f: "u1*u2 + u1",
            g: "1 + 0.5*u2^2",
            ..BASE
        }),
        from_spec(Spec {
            id: "A3_8",
            algebra: "sl(2,R)",
            basis: &[("0", "1", "∂y"), ("x", "y", "x∂x + y∂y"), ("2*x*y", "y^2", "2xy∂x + y²∂y")],
            slots: &["1/dy - 2*x/DY", "1/dym + 2*xm/DY"],
            dode: "-dy/(2*x) + dy^3/x*F",
            delay: "DY^2/x*G",
            f: "u1*u2",
            g: "0.25/(1 + u1^2)",
            sample: &[("x", (1.0, 2.5)), ("y", (1.5, 2.5)), ("ym", (0.5, 1.2))],
            ..BASE
        }),
        from_spec(Spec {
            id: "A3_11",
            algebra: "sl(2,R)",
            basis: &[("0", "1", "∂y"), ("0", "y", "y∂y"), ("0", "y^2", "y²∂y")],
            slots: &["x", "DY^2/(dy*dym)"],
            dode: "2*dy^2/DY + dy*F",
            delay: "G",
            f: "u2",
            g: "u1 - 1/u2",
            sample: &[("y", (1.6, 2.5)), ("ym", (0.5, 1.4))],
            ..BASE
        }),
        from_spec(Spec {
            id: "A3_13",
            algebra: "n_{1,1}⊕s_{2,1}",
            basis: &[("1", "0", "∂x"), ("0", "1", "∂y"), ("0", "y", "y∂y")],
            slots: &["dy/DY", "dym/DY"],
            dode: "dy*F",
            delay: "x - G",
            f: "u1",
            g: "u2 + 1",
            sample: POS_DY,
            ..BASE
        }),
        from_spec(Spec {
            id: "A3_14",
            algebra: "n_{1,1}⊕s_{2,1}",
            basis: &[("0", "x", "x∂y"), ("0", "1", "∂y"), ("x", "y", "x∂x + y∂y")],
            slots: &["dy - YX", "dy - dym"],
            dode: "F/x",
            delay: "x*G",
            f: "u1 + u2",
            g: "0.5/(1 + u2^2)",
            ..BASE
        }),
        from_spec(Spec {
            id: "A3_15",
            algebra: "3n_{1,1}",
            basis: &[("0", "1", "∂y"), ("0", "x", "x∂y"), ("0", "exp(x)", "e^x∂y")],
            slots: &[
                "x",
                "(dy - YX)/(exp(x) - (exp(x) - exp(xm))/DX) - (dy - dym)/(exp(x) - exp(xm))",
            ],
            dode: "exp(x)/(exp(x) - (exp(x) - exp(xm))/DX)*(dy - YX) + exp(x)*F",
            delay: "G",
            f: "u1 + u2^2",
            g: "u1 - 0.5 - 0.25*sin(u1)",
            ..BASE
        }),
        from_spec(Spec {
            id: "A4_1",
            algebra: "n_{4,1}",
            basis: &[("0", "1", "∂y"), ("0", "x", "x∂y"), ("0", "x^2", "x²∂y"), ("1", "0", "∂x")],
            slots: &["dy + dym - 2*YX"],
            dode: "(dy - dym)/DX + F",
            delay: "x - G",
            f: "u1^2",
            g: "1 + 0.2*arctan(u1)",
            sample: &[("delta", (0.5, 1.5))],
            ..BASE
        }),
        h3_entry(),
        from_spec(Spec {
            id: "A4_8",
            algebra: "s_{4,6}",
            basis: &[("0", "1", "∂y"), ("1", "0", "∂x"), ("0", "x", "x∂y"), ("x", "0", "x∂x")],
            slots: &["DX*(dym - YX)"],
            dode: "F/DX^2",
            delay: "x - G/(dy - YX)",
            f: "u1",
            g: "1 + 0.1*u1",
            sample: &[("y", (1.5, 2.5)), ("ym", (0.5, 1.5)), ("delta", (1e-3, 20.0))],
            ..BASE
        }),
        from_spec(Spec {
            id: "A4_11",
            algebra: "s_{4,11}",
            basis: &[("0", "1", "∂y"), ("1", "0", "∂x"), ("0", "x", "x∂y"), ("x", "y", "x∂x + y∂y")],
            slots: &["dym - YX"],
            dode: "F/DX",
            delay: "x - DY/(dy - G)",
            f: "u1",
            g: "0.5*u1",
            sample: &[
                ("dy", (1.5, 2.5)),
                ("dym", (0.5, 1.5)),
                ("y", (1.5, 2.5)),
                ("ym", (0.5, 1.4)),
            ],
            ..BASE
        }),
        from_spec(Spec {
            id: "A4_12",
            algebra: "s_{4,11}",
            basis: &[("0", "1", "∂y"), ("0", "x", "x∂y"), ("1", "0", "∂x"), ("0", "y", "y∂y")],
            slots: &["(dym - YX)/(dy - YX)"],
            dode: "(dy - YX)*F",
            delay: "x - G",
            f: "u1",
            g: "1 + 0.1*arctan(u1)",
            sample: &[("delta", (0.5, 1.5))],
            ..BASE
        }),
        from_spec(Spec {
            id: "A4_20",
            algebra: "2s_{2,1}",
            basis: &[("1", "0", "∂x"), ("x", "0", "x∂x"), ("0", "1", "∂y"), ("0", "y", "y∂y")],
            slots: &["dym/dy"],
            dode: "dy/DX*F",
            delay: "x - DY/dy*G",
            f: "u1",
            g: "1 + u1^2",
            sample: POS_DY,
            ..BASE
        }),
        from_spec(Spec {
            id: "A4_21",
            algebra: "2s_{2,1}",
            basis: &[("0", "1", "∂y"), ("x", "y", "x∂x + y∂y"), ("0", "x", "x∂y"), ("x", "0", "x∂x")],
            slots: &["(dym - YX)/(dy - YX)"],
            dode: "(dy - YX)/x*F",
            delay: "x*G",
            f: "u1",
            g: "0.5 + 0.1*arctan(u1)",
            sample: &[("delta", (0.05, 2.0))],
            ..BASE
        }),
        s3_entry(),
        {
            let mut e = from_spec(Spec {
                id: "A5_1",
                algebra: "s_{5,33}",
                basis: &[
                    ("0", "1", "∂y"),
                    ("0", "x", "x∂y"),
                    ("0", "x^2", "x²∂y"),
                    ("1", "0", "∂x"),
                    ("x", "0", "x∂x"),
                ],
                dode: "2*(dy - YX)/DX + C1/DX^2",
                delay: "x - C2/(dy + dym - 2*YX)",
                params: &[("C1", 0.3), ("C2", 1.2)],
                sample: &[("y", (1.5, 2.5)), ("ym", (0.5, 1.5)), ("delta", (1e-3, 6.0))],
                ..BASE
            });
            e.constraints.push(Constraint::NonZero("C2".into()));
            e
        },
        from_spec(Spec {
            id: "A5_4",
            algebra: "s_{5,36}",
            basis: &[
                ("0", "1", "∂y"),
                ("0", "x", "x∂y"),
                ("0", "x^2", "x²∂y"),
                ("1", "0", "∂x"),
                ("x", "2*y", "x∂x + 2y∂y"),
            ],
            dode: "2*(dy - YX)/DX + C1",
            delay: "x - C2*(dy + dym - 2*YX)",
            params: &[("C1", 0.5), ("C2", 0.3)],
            sample: &[("y", (0.5, 1.0)), ("ym", (1.0, 1.5))],
            ..BASE
        }),
        {
            let mut e = from_spec(Spec {
                id: "A5_5",
                algebra: "s_{5,44}",
                basis: &[
                    ("0", "1", "∂y"),
                    ("0", "x", "x∂y"),
                    ("1", "0", "∂x"),
                    ("x", "0", "x∂x"),
                    ("0", "y", "y∂y"),
                ],
                dode: "C1*(dy - YX)/DX",
                delay: "x - (1 - C2)*DY/(dy - C2*dym)",
                params: &[("C1", 0.7), ("C2", 0.4)],
                sample: &[
                    ("y", (1.5, 2.5)),
                    ("ym", (0.5, 1.4)),
                    ("dy", (1.5, 2.5)),
                    ("dym", (0.5, 1.5)),
                ],
                ..BASE
            });
            e.constraints.push(Constraint::NotIn("C2".into(), vec![1.0]));
            e
        },
        {
            let mut e = from_spec(Spec {
                id: "A5_6",
                algebra: "sl(2,R)⋉2n_{1,1}",
                basis: &[
                    ("1", "0", "∂x"),
                    ("2*x", "y", "2x∂x + y∂y"),
                    ("x^2", "x*y", "x²∂x + xy∂y"),
                    ("0", "1", "∂y"),
                    ("0", "x", "x∂y"),
                ],
                dode: "C1*(dy - YX)^3",
                delay: "x - C2/((dy - YX)*(dym - YX))",
                params: &[("C1", 0.5), ("C2", 0.2)],
                sample: &[("y", (1.2, 1.5)), ("ym", (0.8, 1.1)), ("delta", (1e-3, 5.0))],
                ..BASE
            });
            e.constraints.push(Constraint::NonZero("C2".into()));
            e
        },
        {
            let mut e = from_spec(Spec {
                id: "A5_8",
                algebra: "s_{2,1}⊕sl(2,R)",
                basis: &[
                    ("1", "0", "∂x"),
                    ("x", "0", "x∂x"),
                    ("0", "1", "∂y"),
                    ("0", "y", "y∂y"),
                    ("0", "y^2", "y²∂y"),
                ],
                dode: "2*dy^2/DY + C1*dy/DX",
                delay: "x - sqrt(C2*DY^2/(dy*dym))",
                params: &[("C1", 0.7), ("C2", 0.5)],
                sample: POS_DY,
                ..BASE
            });
            e.constraints.push(Constraint::Positive("C2".into()));
            e
        },
        from_spec(Spec {
            id: "A6_1",
            algebra: "so(3,1)",
            basis: &[
                ("1", "0", "∂x"),
                ("0", "1", "∂y"),
                ("x", "y", "x∂x + y∂y"),
                ("y", "-x", "y∂x - x∂y"),
                ("x^2 - y^2", "2*x*y", "(x² - y²)∂x + 2xy∂y"),
                ("2*x*y", "y^2 - x^2", "2xy∂x + (y² - x²)∂y"),
            ],
            dode: "2*(dy^2 + 1)/(YX^2 + 1)*(dy - YX)/DX",
            delay: "x - DY/tan((arctan(dy) + arctan(dym) - C)/2)",
            params: &[("C", 0.3)],
            sample: POS_DY,
            ..BASE
        }),
        from_spec(Spec {
            id: "A6_2",
            algebra: "sl(2,R)⋉3n_{1,1}",
            basis: &[
                ("1", "0", "∂x"),
                ("x", "y", "x∂x + y∂y"),
                ("x^2", "2*x*y", "x²∂x + 2xy∂y"),
                ("0", "1", "∂y"),
                ("0", "x", "x∂y"),
                ("0", "x^2", "x²∂y"),
            ],
            dode: "2*(dy - YX)/DX",
            delay: "x - 2*DY/(dy + dym - C)",
            params: &[("C", 0.5)],
            sample: POS_DY,
            ..BASE
        }),
        {
            let mut e = from_spec(Spec {
                id: "A6_3",
                algebra: "sl(2,R)⊕sl(2,R)",
                basis: &[
                    ("1", "0", "∂x"),
                    ("x", "0", "x∂x"),
                    ("x^2", "0", "x²∂x"),
                    ("0", "1", "∂y"),
                    ("0", "y", "y∂y"),
                    ("0", "y^2", "y²∂y"),
                ],
                dode: "2*dy^2/DY - 2*dy/DX",
                delay: "x - sqrt(C*DY^2/(dy*dym))",
                params: &[("C", 4.0)],
                sample: POS_DY,
                ..BASE
            });
            e.constraints.push(Constraint::Positive("C".into()));
            e
        },
        marker(
            "H_m",
            "linear homogeneous systems admitting y∂y and m solution fields ρ_i(x)∂y",
        ),
        marker(
            "S_m",
            "linear systems admitting m solution fields ρ_i(x)∂y but not y∂y",
        ),
    ];
    v.extend((1..=3).map(traffic_entry));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template_entries() -> impl Iterator<Item = &'static CatalogEntry> {
        entries().iter().filter(|e| e.kind != EntryKind::Marker)
    }

    #[test]
    fn every_entry_admits_its_basis() {
        for e in template_entries() {
            let c = check_entry(e, 200, 42).unwrap_or_else(|err| panic!("{}: {err}", e.id));
            assert!(c.passes(), "{}: inv {:.2e} jacobi {:.2e} neg {:.2e}", e.id, c.max_invariance(), c.jacobi, c.negative_control);
        }
    }

    #[test]
    fn structure_constants_of_small_algebras() {
        // [∂y, y∂y] = ∂y
        let c = symmetry::check_closure(&get("A2_1").unwrap().basis, &Bindings::new()).unwrap();
        assert!((c.get(0, 1, 0) - 1.0).abs() < 1e-9);
        assert!(c.get(0, 1, 1).abs() < 1e-9);
        // sl(2): [∂y, y∂y] = ∂y, [∂y, y²∂y] = 2y∂y, [y∂y, y²∂y] = y²∂y
        let c = symmetry::check_closure(&get("A3_11").unwrap().basis, &Bindings::new()).unwrap();
        assert!((c.get(0, 1, 0) - 1.0).abs() < 1e-9);
        assert!((c.get(0, 2, 1) - 2.0).abs() < 1e-9);
        assert!((c.get(1, 2, 2) - 1.0).abs() < 1e-9);
        // two commuting copies of the affine algebra
        let c = symmetry::check_closure(&get("A4_20").unwrap().basis, &Bindings::new()).unwrap();
        assert!((c.get(0, 1, 0) - 1.0).abs() < 1e-9);
        assert!((c.get(2, 3, 2) - 1.0).abs() < 1e-9);
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert!((0..4).all(|k| c.get(i, j, k).abs() < 1e-9));
        }
    }

    #[test]
    fn export_round_trips() {
        let text = export();
        let parsed = parse_catalog(&text).unwrap();
        assert_eq!(parsed.len(), entries().len());
        assert_eq!(export_entries(&parsed), text);
    }

    #[test]
    fn constraints_and_overrides() {
        let e = get("A3_2a").unwrap();
        let bad = Bindings::new().with("a", 1.5);
        assert!(matches!(e.instantiate(None, None, &bad), Err(Error::InvalidParams(_))));
        let unknown = Bindings::new().with("b", 1.0);
        assert!(matches!(e.instantiate(None, None, &unknown), Err(Error::InvalidParams(_))));
        let f: Expr = "u1 + x".parse().unwrap();
        assert!(e.instantiate(Some(&f), None, &Bindings::new()).is_err());
        assert!(matches!(get("nope"), Err(Error::UnknownEntry(_))));
        assert!(get("H_m").unwrap().default_system().is_err());
    }
}
