//! Point vector fields in the `(x, y)` plane, their second-order delayed
//! prolongation, Lie brackets, numerical structure constants and the
//! invariant count `k = 7 - rank Z`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::linalg::{self, RANK_TOL};
use crate::sampling::{self, SampleRng};

/// `X = xi(x, y) ∂x + eta(x, y) ∂y`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub xi: Expr,
    pub eta: Expr,
    pub label: String,
}

impl VectorField {
    /// Builds a field, rejecting coefficients that mention jet or delayed
    /// coordinates.
    pub fn new(xi: Expr, eta: Expr) -> Result<Self> {
        for (name, e) in [("xi", &xi), ("eta", &eta)] {
            if let Some(v) = e.vars().into_iter().find(|v| !matches!(v, Var::X | Var::Y)) {
                return Err(Error::InvalidField(format!(
                    "{name} depends on `{v}`; only x, y and parameters are allowed"
                )));
            }
        }
        let label = Self::default_label(&xi, &eta);
        Ok(VectorField { xi, eta, label })
    }

    pub fn parse(xi: &str, eta: &str) -> Result<Self> {
        Self::new(xi.parse()?, eta.parse()?)
    }

    /// Parses the `"xi;eta"` form used on the command line.
    pub fn parse_pair(text: &str) -> Result<Self> {
        let (xi, eta) = text
            .split_once(';')
            .ok_or_else(|| Error::InvalidField(format!("expected `xi;eta`, got `{text}`")))?;
        Self::parse(xi.trim(), eta.trim())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn default_label(xi: &Expr, eta: &Expr) -> String {
        let part = |c: &Expr, d: &str| -> Option<String> {
            if c.is_zero() {
                None
            } else if c.is_one() {
                Some(d.to_string())
            } else {
                Some(format!("{c}{d}"))
            }
        };
        match (part(xi, "∂x"), part(eta, "∂y")) {
            (None, None) => "0".into(),
            (Some(a), None) | (None, Some(a)) => a,
            (Some(a), Some(b)) => format!("{a} + {b}"),
        }
    }

    pub fn zero() -> Self {
        VectorField {
            xi: Expr::num(0.0),
            eta: Expr::num(0.0),
            label: "0".into(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let xi = (c * &self.xi).simplify();
        let eta = (c * &self.eta).simplify();
        let label = Self::default_label(&xi, &eta);
        VectorField { xi, eta, label }
    }

    pub fn plus(&self, other: &VectorField) -> Self {
        let xi = (&self.xi + &other.xi).simplify();
        let eta = (&self.eta + &other.eta).simplify();
        let label = Self::default_label(&xi, &eta);
        VectorField { xi, eta, label }
    }

    /// Linear combination `Σ c_i X_i`.
    pub fn combination(coeffs: &[f64], fields: &[VectorField]) -> Self {
        coeffs
            .iter()
            .zip(fields)
            .fold(VectorField::zero(), |acc, (c, f)| acc.plus(&f.scaled(*c)))
    }

    /// `X(h) = xi ∂h/∂x + eta ∂h/∂y`.
    pub fn apply(&self, h: &Expr) -> Expr {
        (&self.xi * h.diff(Var::X) + &self.eta * h.diff(Var::Y)).simplify()
    }

    /// `(xi, eta)` at a point.
    pub fn eval_at(&self, x: f64, y: f64, params: &Bindings) -> Result<(f64, f64)> {
        let mut b = params.clone();
        b.set_var(Var::X, x);
        b.set_var(Var::Y, y);
        Ok((self.xi.eval(&b)?, self.eta.eval(&b)?))
    }

    pub fn bind_params(&self, params: &Bindings) -> Self {
        VectorField {
            xi: self.xi.bind_params(params).simplify(),
            eta: self.eta.bind_params(params).simplify(),
            label: self.label.clone(),
        }
    }

    pub fn prolong(&self) -> ProlongedField {
        // D = ∂x + dy ∂y for coefficients of (x, y); D2 adds ddy ∂dy.
        let dy = Expr::var(Var::Dy);
        let ddy = Expr::var(Var::Ddy);
        let total = |h: &Expr| h.diff(Var::X) + &dy * h.diff(Var::Y);
        let total2 = |h: &Expr| total(h) + &ddy * h.diff(Var::Dy);
        let zeta1 = (total(&self.eta) - &dy * total(&self.xi)).simplify();
        let zeta2 = (total2(&zeta1) - &ddy * total(&self.xi)).simplify();
        ProlongedField {
            xi: self.xi.clone(),
            eta: self.eta.clone(),
            xi_m: self.xi.delayed(),
            eta_m: self.eta.delayed(),
            zeta1_m: zeta1.delayed(),
            zeta1,
            zeta2,
        }
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Coefficients of the prolonged field over the jet space
/// `(x, y, xm, ym, dy, dym, ddy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongedField {
    pub xi: Expr,
    pub eta: Expr,
    pub xi_m: Expr,
    pub eta_m: Expr,
    pub zeta1: Expr,
    pub zeta1_m: Expr,
    pub zeta2: Expr,
}

impl ProlongedField {
    /// Coefficients in [`Var::JET`] order.
    pub fn coefficients(&self) -> [&Expr; 7] {
        [
            &self.xi,
            &self.eta,
            &self.xi_m,
            &self.eta_m,
            &self.zeta1,
            &self.zeta1_m,
            &self.zeta2,
        ]
    }

    pub fn eval_row(&self, point: &Bindings) -> Result<[f64; 7]> {
        let mut row = [0.0; 7];
        for (r, c) in row.iter_mut().zip(self.coefficients()) {
            *r = c.eval(point)?;
        }
        Ok(row)
    }

    /// `pr X (phi)` at `point`.
    pub fn apply(&self, phi: &Expr, point: &Bindings) -> Result<f64> {
        let grads = jet_gradient(phi);
        self.apply_gradient(&grads, point)
    }

    /// Same as [`apply`](Self::apply) with precomputed partial derivatives.
    pub fn apply_gradient(&self, grads: &[Expr; 7], point: &Bindings) -> Result<f64> {
        let mut total = 0.0;
        for (c, g) in self.coefficients().into_iter().zip(grads) {
            if g.is_zero() || c.is_zero() {
                continue;
            }
            total += c.eval(point)? * g.eval(point)?;
        }
        Ok(total)
    }
}

/// Partial derivatives of `phi` along the seven jet coordinates.
pub fn jet_gradient(phi: &Expr) -> [Expr; 7] {
    Var::JET.map(|v| phi.diff(v))
}

/// `[X, Y] = (X ξ_Y − Y ξ_X) ∂x + (X η_Y − Y η_X) ∂y`.
pub fn lie_bracket(a: &VectorField, b: &VectorField) -> VectorField {
    let xi = (a.apply(&b.xi) - b.apply(&a.xi)).simplify();
    let eta = (a.apply(&b.eta) - b.apply(&a.eta)).simplify();
    let label = format!("[{}, {}]", a.label, b.label);
    VectorField { xi, eta, label }
}

/// `c[i][j][k]` with `[X_i, X_j] = Σ_k c[i][j][k] X_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    pub n: usize,
    pub c: Vec<f64>,
    pub max_residual: f64,
}

impl StructureConstants {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.n + j) * self.n + k]
    }

    /// Constants with magnitude above `tol`, as `(i, j, k, value)`.
    pub fn nonzero(&self, tol: f64) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                for k in 0..self.n {
                    let v = self.get(i, j, k);
                    if v.abs() > tol {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    pub fn is_abelian(&self, tol: f64) -> bool {
        self.nonzero(tol).is_empty()
    }
}

fn sample_plane(rng: &mut SampleRng) -> (f64, f64) {
    (
        sampling::uniform(rng, (0.5, 2.5)),
        sampling::uniform(rng, (0.5, 2.5)),
    )
}

/// Stacks `[ξ_k; η_k]` and the target rows at sampled points.
fn span_system(
    basis: &[VectorField],
    target: &VectorField,
    params: &Bindings,
    rng: &mut SampleRng,
    points: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = basis.len();
    let mut a = DMatrix::zeros(2 * points, n);
    let mut b = DVector::zeros(2 * points);
    let mut filled = 0;
    let mut attempts = 0;
    while filled < points {
        attempts += 1;
        if attempts > 50 * points {
            return Err(Error::IncompatibleSampling {
                failed: attempts - filled,
                total: attempts,
            });
        }
        let (x, y) = sample_plane(rng);
        let rows: Result<Vec<(f64, f64)>> = basis.iter().map(|f| f.eval_at(x, y, params)).collect();
        let (Ok(rows), Ok(t)) = (rows, target.eval_at(x, y, params)) else {
            continue;
        };
        for (k, (xi, eta)) in rows.into_iter().enumerate() {
            a[(2 * filled, k)] = xi;
            a[(2 * filled + 1, k)] = eta;
        }
        b[2 * filled] = t.0;
        b[2 * filled + 1] = t.1;
        filled += 1;
    }
    Ok((a, b))
}

/// Expresses `target` in the span of `basis` with constant coefficients.
/// Returns the coefficients and the max residual over the samples.
pub fn span_coefficients(
    basis: &[VectorField],
    target: &VectorField,
    params: &Bindings,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let n = basis.len();
    let points = 2 * n + 4;
    let mut rng = sampling::rng(seed);
    for _ in 0..3 {
        let (a, b) = span_system(basis, target, params, &mut rng, points)?;
        let (x, rank) = linalg::lstsq(&a, &b, 1e-12);
        if rank < n {
            continue;
        }
        let res = linalg::max_residual(&a, &x, &b);
        return Ok((x.iter().copied().collect(), res));
    }
    Err(Error::RankDeficient(format!(
        "basis of {n} fields is linearly dependent at the sampled points"
    )))
}

/// Structure constants of the span of `fields`, or the first pair whose
/// bracket leaves the span (residual above `1e-9`).
pub fn check_closure(fields: &[VectorField], params: &Bindings) -> Result<StructureConstants> {
    check_closure_seeded(fields, params, sampling::DEFAULT_SEED)
}

pub fn check_closure_seeded(
    fields: &[VectorField],
    params: &Bindings,
    seed: u64,
) -> Result<StructureConstants> {
    let n = fields.len();
    if n < 2 {
        return Err(Error::InvalidField("closure needs at least two fields".into()));
    }
    let mut c = vec![0.0; n * n * n];
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let br = lie_bracket(&fields[i], &fields[j]);
            let (coef, res) = span_coefficients(fields, &br, params, seed ^ ((i * n + j) as u64))?;
            if res > 1e-9 {
                return Err(Error::NotClosed {
                    i: i + 1,
                    j: j + 1,
                    residual: res,
                });
            }
            worst = worst.max(res);
            for k in 0..n {
                c[(i * n + j) * n + k] = coef[k];
                c[(j * n + i) * n + k] = -coef[k];
            }
        }
    }
    Ok(StructureConstants {
        n,
        c,
        max_residual: worst,
    })
}

/// Max norm of the Jacobi combination
/// `[[X,Y],Z] + [[Y,Z],X] + [[Z,X],Y]` over `points` random plane points.
pub fn jacobi_residual(
    a: &VectorField,
    b: &VectorField,
    c: &VectorField,
    params: &Bindings,
    points: usize,
    seed: u64,
) -> Result<f64> {
    let j = lie_bracket(&lie_bracket(a, b), c)
        .plus(&lie_bracket(&lie_bracket(b, c), a))
        .plus(&lie_bracket(&lie_bracket(c, a), b));
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0f64;
    let mut ok = 0;
    let mut tries = 0;
    while ok < points && tries < 20 * points {
        tries += 1;
        let (x, y) = sample_plane(&mut rng);
        if let Ok((u, v)) = j.eval_at(x, y, params) {
            worst = worst.max(u.abs()).max(v.abs());
            ok += 1;
        }
    }
    if ok < points {
        return Err(Error::IncompatibleSampling {
            failed: tries - ok,
            total: tries,
        });
    }
    Ok(worst)
}

/// Outcome of the rank computation on the prolongation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ZReport {
    pub dim_m: usize,
    pub rank_z: usize,
    pub k: usize,
    pub sample_points: Vec<[f64; 7]>,
}

fn bind_jet(p: &[f64; 7], params: &Bindings) -> Bindings {
    let mut b = params.clone();
    for (v, val) in Var::JET.iter().zip(p) {
        b.set_var(*v, *val);
    }
    b
}

/// Number of functionally independent invariants of the prolonged action.
pub fn invariant_count(fields: &[VectorField], params: &Bindings) -> Result<ZReport> {
    invariant_count_seeded(fields, params, sampling::DEFAULT_SEED, 8)
}

pub fn invariant_count_seeded(
    fields: &[VectorField],
    params: &Bindings,
    seed: u64,
    points: usize,
) -> Result<ZReport> {
    if fields.is_empty() {
        return Err(Error::InvalidField("need at least one field".into()));
    }
    let prolonged: Vec<ProlongedField> = fields.iter().map(VectorField::prolong).collect();
    let mut rng = sampling::rng(seed);
    let points = points.max(5);
    let mut used = Vec::new();
    let mut rank = 0;
    let mut tries = 0;
    while used.len() < points {
        tries += 1;
        if tries > 50 * points {
            return Err(Error::IncompatibleSampling {
                failed: tries - used.len(),
                total: tries,
            });
        }
        let p = sampling::generic_jet(&mut rng, 0.5, 2.5);
        let b = bind_jet(&p, params);
        let rows: Result<Vec<[f64; 7]>> = prolonged.iter().map(|f| f.eval_row(&b)).collect();
        let Ok(rows) = rows else { continue };
        let z = DMatrix::from_fn(rows.len(), 7, |i, j| rows[i][j]);
        rank = rank.max(linalg::numerical_rank(&z, RANK_TOL));
        used.push(p);
    }
    Ok(ZReport {
        dim_m: 7,
        rank_z: rank,
        k: 7 - rank,
        sample_points: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vf(xi: &str, eta: &str) -> VectorField {
        VectorField::parse(xi, eta).unwrap()
    }

    #[test]
    fn constant_field_prolongs_to_zero() {
        let p = vf("0", "1").prolong();
        assert!(p.zeta1.is_zero() && p.zeta1_m.is_zero() && p.zeta2.is_zero());
        assert!(p.eta_m.is_one());
    }

    #[test]
    fn scaling_prolongation() {
        let p = vf("x", "y").prolong();
        assert!(p.zeta1.is_zero());
        assert_eq!(p.zeta2.to_string(), "(-ddy)");
    }

    #[test]
    fn quadratic_vertical_prolongation() {
        let p = vf("0", "x^2").prolong();
        assert_eq!(p.zeta1.to_string(), "(2 * x)");
        assert_eq!(p.zeta2.to_string(), "2");
        assert_eq!(p.zeta1_m.to_string(), "(2 * xm)");
    }

    #[test]
    fn rejects_jet_coefficients() {
        assert!(VectorField::parse("dy", "0").is_err());
        assert!(VectorField::parse("a*x", "y").is_ok());
    }

    #[test]
    fn brackets() {
        let d = lie_bracket(&vf("0", "1"), &vf("0", "y"));
        assert_eq!((d.xi.to_string(), d.eta.to_string()), ("0".into(), "1".into()));
        let d = lie_bracket(&vf("0", "1"), &vf("0", "y^2"));
        assert_eq!(d.eta.to_string(), "(2 * y)");
        let d = lie_bracket(&vf("1", "0"), &vf("x", "a*y"));
        assert_eq!((d.xi.to_string(), d.eta.to_string()), ("1".into(), "0".into()));
    }

    #[test]
    fn closure_tables() {
        let none = Bindings::new();
        let c = check_closure(&[vf("1", "0"), vf("0", "1")], &none).unwrap();
        assert!(c.is_abelian(1e-12));
        let c = check_closure(&[vf("0", "1"), vf("x", "y")], &none).unwrap();
        assert!((c.get(0, 1, 0) - 1.0).abs() < 1e-9);
        assert!(c.get(0, 1, 1).abs() < 1e-9);
        let c = check_closure(&[vf("0", "1"), vf("0", "y"), vf("0", "y^2")], &none).unwrap();
        assert!((c.get(0, 1, 0) - 1.0).abs() < 1e-9);
        assert!((c.get(0, 2, 1) - 2.0).abs() < 1e-9);
        assert!((c.get(1, 2, 2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn closure_failure_names_pair() {
        let err = check_closure(&[vf("0", "1"), vf("0", "y^3")], &Bindings::new()).unwrap_err();
        assert!(matches!(err, Error::NotClosed { i: 1, j: 2, .. }), "{err}");
    }

    #[test]
    fn rank_examples() {
        let none = Bindings::new();
        assert_eq!(invariant_count(&[vf("0", "1")], &none).unwrap().k, 6);
        assert_eq!(invariant_count(&[vf("1", "0"), vf("0", "1")], &none).unwrap().k, 5);
        let a41 = [vf("0", "1"), vf("0", "x"), vf("0", "x^2"), vf("1", "0")];
        let r = invariant_count(&a41, &none).unwrap();
        assert_eq!((r.rank_z, r.k), (4, 3));
    }
}
