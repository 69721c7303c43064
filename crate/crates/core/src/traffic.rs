//! Delayed follow-the-leader car model.
//!
//! Each follower reacts after a delay to its predecessor:
//! `ddx = alpha * dx^n1 * (dx_p(t-) - dx(t-)) / (x_p(t-) - x(t-))^n2`.
//! Internally time is the independent variable `x` and position is `y`, so
//! the two-car model is an ordinary [`DodsSystem`] whose leader `L(t)` enters
//! through `L(xm)` and `L'(xm)`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::dods::DodsSystem;
use crate::error::{Error, Result};
use crate::expr::{jet, Bindings, Expr, Var};
use crate::integrate::{self, Dy0, HistoryFunction, InProgress, Node, Past, Side, Trajectory};
use crate::reduce::{self, InvariantPair, InvariantSolution};
use crate::roots;
use crate::sampling::SampleBox;
use crate::symmetry::VectorField;

/// The three worked examples with their specific constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Example {
    /// Leader `v t`, constant delay; `a` is the follower offset.
    One { v: f64, tau: f64, a: f64 },
    /// Leader `k t^(1 - 1/n1)`, delay `t- = q t`, `n2 = 0`.
    Two { k: f64, q: f64, beta: f64 },
    /// Leader `k e^(eps t)`, constant delay, `n1 = n2`.
    Three { k: f64, epsilon: f64, tau: f64 },
}

impl Example {
    pub fn id(&self) -> u8 {
        match self {
            Example::One { .. } => 1,
            Example::Two { .. } => 2,
            Example::Three { .. } => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrafficParams {
    pub alpha: f64,
    pub n1: f64,
    pub n2: f64,
    /// Leader position as an expression in `t`.
    pub leader: Expr,
    /// Delay relation `t- = g(t)`, written in `x`.
    pub delay: Expr,
    pub example: Option<Example>,
}

impl TrafficParams {
    /// Generic parameters with a constant reaction delay.
    pub fn new(alpha: f64, n1: f64, n2: f64, leader: Expr, tau: f64) -> Result<Self> {
        let p = TrafficParams {
            alpha,
            n1,
            n2,
            leader,
            delay: jet::x() - tau,
            example: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Example 1 with `alpha = n1 = n2 = 1`.
    pub fn example1(v: f64, tau: f64, a: f64) -> Self {
        TrafficParams {
            alpha: 1.0,
            n1: 1.0,
            n2: 1.0,
            leader: v * Expr::var(Var::T),
            delay: jet::x() - tau,
            example: Some(Example::One { v, tau, a }),
        }
    }

    pub fn example2(alpha: f64, n1: f64, k: f64, q: f64, beta: f64) -> Self {
        let ne = 1.0 - 1.0 / n1;
        TrafficParams {
            alpha,
            n1,
            n2: 0.0,
            leader: k * Expr::pow(Expr::var(Var::T), Expr::num(ne)),
            delay: q * jet::x(),
            example: Some(Example::Two { k, q, beta }),
        }
    }

    pub fn example3(alpha: f64, n: f64, epsilon: f64, tau: f64, k: f64) -> Self {
        TrafficParams {
            alpha,
            n1: n,
            n2: n,
            leader: k * Expr::exp(epsilon * Expr::var(Var::T)),
            delay: jet::x() - tau,
            example: Some(Example::Three { k, epsilon, tau }),
        }
    }

    /// Default parameters of each example.
    pub fn example(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Self::example1(1.0, 0.5, -1.0)),
            2 => Ok(Self::example2(-2.0, 2.0, 2.0, 0.5, 0.0)),
            3 => Ok(Self::example3(1.0, 2.0, 0.5, 1.0, 1.0)),
            _ => Err(Error::InvalidParams(format!("unknown example {id}; expected 1, 2 or 3"))),
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_exponents(mut self, n1: f64, n2: f64) -> Self {
        self.n1 = n1;
        self.n2 = n2;
        self
    }

    /// Constant delay, if the delay relation is `x - tau`.
    pub fn tau(&self) -> Option<f64> {
        let b = Bindings::new().with_var(Var::X, 0.0);
        let t0 = self.delay.eval(&b).ok()?;
        let t1 = self.delay.eval(&b.clone().with_var(Var::X, 1.0)).ok()?;
        ((t1 - t0 - 1.0).abs() < 1e-14).then_some(-t0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0.0 || !self.alpha.is_finite() {
            return Err(Error::InvalidParams("alpha must be a nonzero number".into()));
        }
        if let Some(v) = self.leader.vars().into_iter().find(|v| *v != Var::T) {
            return Err(Error::InvalidParams(format!("leader may only depend on t, found `{v}`")));
        }
        if let Some(t) = self.tau() {
            if !(t > 0.0) {
                return Err(Error::InvalidParams(format!("tau must be positive, got {t}")));
            }
        }
        match self.example {
            Some(Example::Two { q, .. }) => {
                if self.n1 * (self.n1 - 1.0) == 0.0 {
                    return Err(Error::InvalidParams("n1 must differ from 0 and 1".into()));
                }
                if self.n1 < 1.0 && self.n1.fract() != 0.0 {
                    return Err(Error::InvalidParams(
                        "the constraint needs n1 > 1 or an integer n1".into(),
                    ));
                }
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::InvalidParams(format!("q must lie in (0, 1), got {q}")));
                }
                if self.n2 != 0.0 {
                    return Err(Error::InvalidParams("n2 must be 0".into()));
                }
            }
            Some(Example::Three { .. }) => {
                if self.n1 != self.n2 || self.n1 == 0.0 {
                    return Err(Error::InvalidParams("n1 = n2 = n != 0 is required".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn leader_at(&self, at: &Expr) -> (Expr, Expr) {
        let dl = self.leader.diff(Var::T).simplify();
        (
            self.leader.subst_var(Var::T, at),
            dl.subst_var(Var::T, at),
        )
    }

    /// Sampling box where the example's right-hand side is regular.
    pub(crate) fn sample_box(&self) -> SampleBox {
        match self.example {
            Some(Example::One { v, tau, .. }) => SampleBox::uniform(0.5, 1.5)
                .with("x", (1.0, 3.0))
                .with("y", (v * 1.0 - 3.0, v * 1.0 - 1.5))
                .with("ym", (v * (1.0 - tau) - 3.0, v * (1.0 - tau) - 1.5)),
            Some(Example::Two { .. }) => SampleBox::uniform(0.5, 1.5).with("x", (1.0, 3.0)),
            Some(Example::Three { .. }) => SampleBox::uniform(0.5, 1.5)
                .with("x", (1.0, 3.0))
                .with("y", (-1.0, 0.5))
                .with("ym", (-1.0, 0.5)),
            None => SampleBox::uniform(0.5, 1.5),
        }
    }
}

/// `alpha * dy^n1 * (P' - dym) / (P - ym)^n2` with the predecessor's delayed
/// position and velocity as parameters `lead` and `dlead`.
fn chain_rhs(p: &TrafficParams) -> Expr {
    let num = p.alpha
        * Expr::pow(jet::dy(), Expr::num(p.n1))
        * (Expr::param("dlead") - jet::dym());
    num / Expr::pow(Expr::param("lead") - jet::ym(), Expr::num(p.n2))
}

/// The two-car system for a follower behind the leader.
pub fn build_two_car(p: &TrafficParams) -> Result<DodsSystem> {
    p.validate()?;
    let (l, dl) = p.leader_at(&jet::xm());
    let f = chain_rhs(p).subst_param("lead", &l).subst_param("dlead", &dl);
    Ok(DodsSystem::new(f, p.delay.clone(), Bindings::new())?.with_box(p.sample_box()))
}

/// Generator of the example's symmetry group.
pub fn example_symmetry(p: &TrafficParams) -> Result<VectorField> {
    match p.example {
        Some(Example::One { v, .. }) => Ok(VectorField::new(Expr::num(1.0), Expr::num(v))?.with_label("∂t + v∂x")),
        Some(Example::Two { beta, .. }) => {
            let ne = 1.0 - 1.0 / p.n1;
            Ok(VectorField::new(jet::x(), ne * (jet::y() - beta))?.with_label("X1 - nβX2"))
        }
        Some(Example::Three { epsilon, .. }) => {
            Ok(VectorField::new(Expr::num(1.0), epsilon * jet::y())?.with_label("∂t + εx∂x"))
        }
        None => Err(Error::InvalidParams("no example attached to these parameters".into())),
    }
}

/// The two-dimensional algebra `t∂t + n x∂x`, `∂x` of Example 2.
pub fn example2_algebra(p: &TrafficParams) -> Result<Vec<VectorField>> {
    let ne = 1.0 - 1.0 / p.n1;
    Ok(vec![
        VectorField::new(jet::x(), ne * jet::y())?.with_label("t∂t + nx∂x"),
        VectorField::new(Expr::num(0.0), Expr::num(1.0))?.with_label("∂x"),
    ])
}

/// One root of a constraint equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintRoot {
    pub a: f64,
    pub residual: f64,
    pub double: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSolution {
    pub b: f64,
    /// Admissible roots: `0 < A < k`, so the follower moves forward and stays
    /// behind the leader.
    pub roots: Vec<ConstraintRoot>,
    /// Roots outside `(0, k)` with the reason.
    pub rejected: Vec<(f64, &'static str)>,
    /// `A` is arbitrary (Example 1).
    pub free_a: bool,
    pub warning: Option<String>,
}

/// Left side minus right side of the example's constraint on `A`.
pub fn constraint_value(p: &TrafficParams, a: f64) -> Option<f64> {
    match p.example? {
        Example::Two { k, q, .. } => {
            let n1 = p.n1;
            let c = p.alpha * (n1 - 1.0).powf(n1) / n1.powf(n1 - 1.0) * q.powf(-1.0 / n1);
            let v = c * (k - a) * real_pow(a, n1 - 1.0)? + 1.0;
            v.is_finite().then_some(v)
        }
        Example::Three { k, epsilon, tau } => {
            let base = epsilon * (epsilon * tau).exp() * a / (k - a);
            let v = p.alpha * real_pow(base, p.n1 - 1.0)? - 1.0;
            v.is_finite().then_some(v)
        }
        Example::One { .. } => None,
    }
}

fn real_pow(b: f64, e: f64) -> Option<f64> {
    if e.fract() == 0.0 && e.abs() < 64.0 {
        Some(b.powi(e as i32))
    } else if b >= 0.0 {
        Some(b.powf(e))
    } else {
        None
    }
}

/// Real roots of the constraint. Admissible roots lie in `(0, k)`; integer
/// exponents also scan `(-4k, 0]` and `[k, 5k)` to report rejected roots.
pub fn solve_constraint(p: &TrafficParams) -> Result<ConstraintSolution> {
    p.validate()?;
    let ex = p
        .example
        .ok_or_else(|| Error::InvalidParams("no example attached to these parameters".into()))?;
    let (k, b) = match ex {
        Example::One { tau, .. } => {
            return Ok(ConstraintSolution {
                b: tau,
                roots: Vec::new(),
                rejected: Vec::new(),
                free_a: true,
                warning: None,
            })
        }
        Example::Two { k, q, .. } => (k, q),
        Example::Three { k, tau, .. } => (k, tau),
    };
    let integer = (p.n1 - 1.0).fract() == 0.0;
    let mut cands: Vec<f64> = Vec::new();
    let mut segments = vec![(0.0, k)];
    if integer {
        segments.push((-4.0 * k, 0.0));
        segments.push((k, 5.0 * k));
    }
    for &(lo, hi) in &segments {
        let w = hi - lo;
        let (lo, hi) = (lo + 1e-12 * w, hi - 1e-12 * w);
        let mut f = |a: f64| constraint_value(p, a);
        cands.extend(roots::scan(&mut f, lo, hi, 2000, 1e-9));
        let mut g = |a: f64| constraint_value(p, a).unwrap_or(f64::NAN);
        cands.extend(roots::touching_roots(&mut g, lo, hi, 2000, 1e-12));
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup_by(|a, b| (*a - *b).abs() < 1e-7 * (1.0 + b.abs()));
    let mut sol = ConstraintSolution {
        b,
        roots: Vec::new(),
        rejected: Vec::new(),
        free_a: false,
        warning: None,
    };
    for a in cands {
        let Some(r) = constraint_value(p, a) else {
            continue;
        };
        let eps = 1e-6 * (1.0 + a.abs());
        let sign = |v: Option<f64>| v.map(|v| v > 0.0);
        let double = sign(constraint_value(p, a - eps)) == sign(constraint_value(p, a + eps));
        if a <= 0.0 {
            sol.rejected.push((a, "A <= 0: the follower drives backwards"));
        } else if a >= k {
            sol.rejected.push((a, "A >= k: the follower reaches the leader"));
        } else {
            sol.roots.push(ConstraintRoot { a, residual: r.abs(), double });
        }
    }
    if sol.roots.is_empty() {
        let inevitable = matches!(ex, Example::Two { .. }) && p.alpha > 0.0 && p.n1 > 1.0;
        sol.warning = Some(if inevitable {
            "no admissible root: a collision is inevitable for alpha > 0, n1 > 1".into()
        } else {
            "no admissible root in (0, k): collision regime".into()
        });
    }
    Ok(sol)
}

/// `A` of the closed form for Example 3 with `n = 2`: `k / (1 + alpha eps e^(eps tau))`.
pub fn example3_closed_form(p: &TrafficParams) -> Option<f64> {
    match p.example? {
        Example::Three { k, epsilon, tau } if p.n1 == 2.0 => {
            Some(k / (1.0 + p.alpha * epsilon * (epsilon * tau).exp()))
        }
        _ => None,
    }
}

/// Interval on which the invariant solution is compared: Example 2 starts at
/// `t = 1` because of the proportional delay.
pub fn default_interval(p: &TrafficParams) -> (f64, f64) {
    match p.example {
        Some(Example::One { tau, .. }) => (0.0, 5.0 * tau),
        Some(Example::Two { .. }) => (1.0, 4.0),
        Some(Example::Three { tau, .. }) => (0.0, 3.0 * tau),
        None => (0.0, 1.0),
    }
}

/// The invariant solution with constants `A`, `B` for the example.
pub fn invariant_solution(p: &TrafficParams, a: f64) -> Result<InvariantSolution> {
    let x = example_symmetry(p)?;
    let pair: InvariantPair = reduce::invariants_of(&x, &Bindings::new())?;
    let b = match p.example {
        Some(Example::One { tau, .. }) | Some(Example::Three { tau, .. }) => tau,
        Some(Example::Two { q, .. }) => q,
        None => unreachable!("example_symmetry checked"),
    };
    Ok(InvariantSolution {
        pair,
        a,
        b,
        residual: 0.0,
        free: Vec::new(),
        alternatives: Vec::new(),
        delay_identity: false,
    })
}

/// Deviations between the invariant solution and the integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub a: f64,
    pub max_abs: f64,
    pub max_rel: f64,
}

/// Seeds the integrator with the invariant solution for constant `a` and
/// compares on `[t0, t_end]`.
pub fn compare_exact_vs_numeric(p: &TrafficParams, a: f64, t_end: f64, h: f64) -> Result<Comparison> {
    let sys = build_two_car(p)?;
    let sol = invariant_solution(p, a)?;
    let t0 = default_interval(p).0;
    let exact = sol.h();
    let start = sol.k().eval(&Bindings::new().with_var(Var::X, t0))?;
    let phi = HistoryFunction::symbolic(exact.clone(), start, t0)?;
    let traj = integrate::solve(&sys, &phi, Dy0::FromPhi, t_end, h)?;
    let mut max_abs = 0.0f64;
    let mut scale = 0.0f64;
    for n in &traj.nodes {
        let e = exact.eval(&Bindings::new().with_var(Var::X, n.x))?;
        max_abs = max_abs.max((n.y - e).abs());
        scale = scale.max(e.abs());
    }
    Ok(Comparison {
        a,
        max_abs,
        max_rel: max_abs / scale.max(f64::MIN_POSITIVE),
    })
}

/// Collision or near-collision event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Collision {
    /// 1-based follower index.
    pub car: usize,
    pub t: f64,
    pub headway: f64,
}

/// Headway below which integration halts.
pub const MIN_HEADWAY: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct PlatoonState {
    pub leader: Expr,
    pub cars: Vec<Trajectory>,
    pub collision: Option<Collision>,
}

impl PlatoonState {
    pub fn count(&self) -> usize {
        self.cars.len()
    }

    /// Position of the leader at `t`.
    pub fn leader_at(&self, t: f64) -> Result<f64> {
        Ok(self.leader.eval(&Bindings::new().with_var(Var::T, t))?)
    }

    /// Minimum headway over all nodes and cars.
    pub fn min_headway(&self) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for (i, car) in self.cars.iter().enumerate() {
            for n in &car.nodes {
                let front = if i == 0 {
                    self.leader_at(n.x)?
                } else {
                    self.cars[i - 1].interpolate(n.x)?.0
                };
                worst = worst.min(front - n.y);
            }
        }
        Ok(worst)
    }

    /// CSV with columns `t,x1,dx1,...` on the common time grid.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 1..=self.cars.len() {
            let _ = write!(s, ",x{i},dx{i}");
        }
        s.push('\n');
        let steps = self.cars.first().map_or(0, |c| c.nodes.len());
        for j in 0..steps {
            let _ = write!(s, "{:.16e}", self.cars[0].nodes[j].x);
            for c in &self.cars {
                let n = &c.nodes[j];
                let _ = write!(s, ",{:.16e},{:.16e}", n.y, n.dy);
            }
            s.push('\n');
        }
        s
    }
}

/// Lockstep integration of `histories.len()` followers with constant delay.
/// Car `i + 1` reads car `i`'s past at `t - tau`; car 1 reads the leader.
/// Integration halts at the first step where a headway drops below
/// [`MIN_HEADWAY`].
pub fn simulate_platoon(p: &TrafficParams, histories: &[HistoryFunction], t_end: f64, h: f64) -> Result<PlatoonState> {
    p.validate()?;
    let tau = p
        .tau()
        .ok_or_else(|| Error::InvalidParams("the platoon model needs a constant delay".into()))?;
    if histories.is_empty() {
        return Err(Error::InvalidParams("at least one follower is required".into()));
    }
    let t0 = histories[0].x0();
    if histories.iter().any(|hf| hf.x0() != t0 || hf.start() > t0 - tau) {
        return Err(Error::InvalidParams(format!(
            "every history must cover [{}, {t0}]",
            t0 - tau
        )));
    }
    if !(h > 0.0 && t_end > t0) {
        return Err(Error::InvalidParams("need h > 0 and t_end beyond the initial time".into()));
    }
    let h = tau / (tau / h).ceil();
    let rhs = chain_rhs(p);
    let (lead_e, dlead_e) = p.leader_at(&Expr::var(Var::T));
    let empty = Bindings::new();
    let lead = |t: f64| -> Result<(f64, f64)> {
        let b = Bindings::new().with_var(Var::T, t);
        Ok((lead_e.eval(&b)?, dlead_e.eval(&b)?))
    };
    let n_cars = histories.len();
    let mut nodes: Vec<Vec<Node>> = Vec::with_capacity(n_cars);
    for hf in histories {
        let (y, dy) = hf.eval(t0, &empty)?;
        nodes.push(vec![Node {
            x: t0,
            y,
            dy,
            ddy_left: f64::NAN,
            ddy_right: f64::NAN,
            xm: f64::NAN,
        }]);
    }
    let accel = |t: f64, y: f64, dy: f64, me: (f64, f64), front: (f64, f64)| -> Result<f64> {
        let mut b = Bindings::new().with("lead", front.0).with("dlead", front.1);
        b.set_var(Var::X, t);
        b.set_var(Var::Y, y);
        b.set_var(Var::Dy, dy);
        b.set_var(Var::Xm, t - tau);
        b.set_var(Var::Ym, me.0);
        b.set_var(Var::Dym, me.1);
        rhs.eval(&b).map_err(|e| Error::StepRejected { x: t, msg: e.to_string() })
    };
    let steps = ((t_end - t0) / h - 1e-9).ceil().max(1.0) as usize;
    let mut collision = None;
    'outer: for k in 0..steps {
        let tn = t0 + h * k as f64;
        let t1 = if k + 1 == steps { t_end } else { t0 + h * (k + 1) as f64 };
        let hs = t1 - tn;
        let mid = tn + 0.5 * hs;
        let mut new_nodes = Vec::with_capacity(n_cars);
        for i in 0..n_cars {
            let own = InProgress {
                history: &histories[i],
                params: &empty,
                nodes: &nodes[i],
            };
            let front = |t: f64, side: Side| -> Result<(f64, f64)> {
                if i == 0 {
                    lead(t)
                } else {
                    InProgress {
                        history: &histories[i - 1],
                        params: &empty,
                        nodes: &nodes[i - 1],
                    }
                    .at(t, side)
                }
            };
            let stage = |t: f64, y: f64, dy: f64, side: Side| -> Result<f64> {
                accel(t, y, dy, own.at(t - tau, side)?, front(t - tau, side)?)
            };
            let Node { y, dy, .. } = nodes[i][nodes[i].len() - 1];
            let k1d = stage(tn, y, dy, Side::Right)?;
            let k1y = dy;
            let k2y = dy + 0.5 * hs * k1d;
            let k2d = stage(mid, y + 0.5 * hs * k1y, k2y, Side::Right)?;
            let k3y = dy + 0.5 * hs * k2d;
            let k3d = stage(mid, y + 0.5 * hs * k2y, k3y, Side::Right)?;
            let k4y = dy + hs * k3d;
            let k4d = stage(t1, y + hs * k3y, k4y, Side::Left)?;
            let y1 = y + hs / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            let dy1 = dy + hs / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            let fl = stage(t1, y1, dy1, Side::Left)?;
            new_nodes.push((k1d, Node {
                x: t1,
                y: y1,
                dy: dy1,
                ddy_left: fl,
                ddy_right: f64::NAN,
                xm: t1 - tau,
            }));
        }
        for (i, (k1d, node)) in new_nodes.into_iter().enumerate() {
            let last = nodes[i].len() - 1;
            nodes[i][last].ddy_right = k1d;
            nodes[i][last].xm = tn - tau;
            nodes[i].push(node);
        }
        for i in 0..n_cars {
            let me = nodes[i][nodes[i].len() - 1];
            let front = if i == 0 { lead(t1)?.0 } else { nodes[i - 1][nodes[i - 1].len() - 1].y };
            let gap = front - me.y;
            if !(gap > MIN_HEADWAY) {
                collision = Some(Collision { car: i + 1, t: t1, headway: gap });
                break 'outer;
            }
        }
    }
    let cars = nodes
        .into_iter()
        .zip(histories)
        .map(|(n, hf)| Trajectory {
            history: hf.clone(),
            params: Bindings::new(),
            nodes: n,
            h,
            method: "rk4-hermite",
        })
        .collect();
    Ok(PlatoonState {
        leader: p.leader.clone(),
        cars,
        collision,
    })
}

/// Platoon scenario: a leader, exponents, delay and per-car histories.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub params: TrafficParams,
    pub histories: Vec<Expr>,
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
}

impl Scenario {
    pub fn history_functions(&self) -> Result<Vec<HistoryFunction>> {
        let tau = self.params.tau().unwrap_or(0.0);
        self.histories
            .iter()
            .map(|e| HistoryFunction::symbolic(e.subst_var(Var::T, &jet::x()), self.t0 - tau, self.t0))
            .collect()
    }

    pub fn run(&self) -> Result<PlatoonState> {
        simulate_platoon(&self.params, &self.history_functions()?, self.t_end, self.h)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    /// `key = value` lines with keys `leader`, `n1`, `n2`, `alpha`, `tau`,
    /// `cars`, `history.i` (1-based, expression in `t`), `t0`, `t_end`, `h`.
    fn from_str(text: &str) -> Result<Self> {
        let mut leader = None;
        let (mut n1, mut n2, mut alpha, mut tau) = (1.0, 1.0, 1.0, None);
        let mut cars = None;
        let mut hist: Vec<(usize, Expr, usize)> = Vec::new();
        let (mut t0, mut t_end, mut h) = (0.0, None, 1e-3);
        for (no, raw) in text.lines().enumerate() {
            let line = no + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::Format {
                line,
                msg: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>().map_err(|_| Error::Format {
                    line,
                    msg: format!("`{key}` needs a number, got `{v}`"),
                })
            };
            let parse_expr = |v: &str| -> Result<Expr> {
                v.parse::<Expr>().map_err(|e| Error::Format { line, msg: e.to_string() })
            };
            match key {
                "leader" => leader = Some(parse_expr(value)?),
                "n1" => n1 = num(value)?,
                "n2" => n2 = num(value)?,
                "alpha" => alpha = num(value)?,
                "tau" => tau = Some(num(value)?),
                "cars" => {
                    cars = Some(value.parse::<usize>().map_err(|_| Error::Format {
                        line,
                        msg: format!("`cars` needs a positive integer, got `{value}`"),
                    })?)
                }
                "t0" => t0 = num(value)?,
                "t_end" => t_end = Some(num(value)?),
                "h" => h = num(value)?,
                k if k.starts_with("history.") => {
                    let idx: usize = k["history.".len()..].parse().map_err(|_| Error::Format {
                        line,
                        msg: format!("bad history index in `{k}`"),
                    })?;
                    hist.push((idx, parse_expr(value)?, line));
                }
                other => {
                    return Err(Error::Format {
                        line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let missing = |what: &str| Error::Format {
            line: 0,
            msg: format!("missing `{what}`"),
        };
        let leader = leader.ok_or_else(|| missing("leader"))?;
        let tau = tau.ok_or_else(|| missing("tau"))?;
        let cars = cars.ok_or_else(|| missing("cars"))?;
        let t_end = t_end.ok_or_else(|| missing("t_end"))?;
        let mut histories = vec![None; cars];
        for (idx, e, line) in hist {
            if idx == 0 || idx > cars {
                return Err(Error::Format {
                    line,
                    msg: format!("history index {idx} outside 1..={cars}"),
                });
            }
            histories[idx - 1] = Some(e);
        }
        let histories = histories
            .into_iter()
            .enumerate()
            .map(|(i, e)| e.ok_or_else(|| missing(&format!("history.{}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        let params = TrafficParams::new(alpha, n1, n2, leader, tau)?;
        Ok(Scenario {
            params,
            histories,
            t0,
            t_end,
            h,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dods::check_invariance;

    #[test]
    fn example_symmetries_hold() {
        for id in 1..=3 {
            let p = TrafficParams::example(id).unwrap();
            let s = build_two_car(&p).unwrap();
            let x = example_symmetry(&p).unwrap();
            let r = check_invariance(&s, &x, 200).unwrap();
            assert!(r.passes_at(1e-9), "example {id}: {r:?}");
        }
    }

    #[test]
    fn example3_root_matches_closed_form() {
        let p = TrafficParams::example(3).unwrap();
        let sol = solve_constraint(&p).unwrap();
        assert_eq!(sol.roots.len(), 1);
        let a = example3_closed_form(&p).unwrap();
        assert!((sol.roots[0].a - a).abs() < 1e-12);
        assert!((a - 0.548_137).abs() < 1e-5);
    }

    #[test]
    fn example2_double_root_and_collision_regime() {
        let p = TrafficParams::example2(-4.0, 2.0, 1.0, 0.25, 0.0);
        let sol = solve_constraint(&p).unwrap();
        assert_eq!(sol.roots.len(), 1);
        assert!(sol.roots[0].double);
        assert!((sol.roots[0].a - 0.5).abs() < 1e-7);
        let p = TrafficParams::example2(1.0, 2.0, 1.0, 0.25, 0.0);
        let sol = solve_constraint(&p).unwrap();
        assert!(sol.roots.is_empty());
        assert!(sol.warning.unwrap().contains("inevitable"));
    }

    #[test]
    fn platoon_of_one_matches_two_car_solve() {
        let p = TrafficParams::example1(1.0, 0.5, -1.0);
        let phi = HistoryFunction::symbolic("x + 0.3*sin(2*x) - 1".parse().unwrap(), -0.5, 0.0).unwrap();
        let ps = simulate_platoon(&p, std::slice::from_ref(&phi), 2.5, 1e-2).unwrap();
        let s = build_two_car(&p).unwrap();
        let t = integrate::solve(&s, &phi, Dy0::FromPhi, 2.5, 1e-2).unwrap();
        assert_eq!(ps.cars[0].nodes.len(), t.nodes.len());
        for (a, b) in ps.cars[0].nodes.iter().zip(&t.nodes) {
            assert!((a.y - b.y).abs() < 1e-12);
        }
    }

    #[test]
    fn scenario_file_round() {
        let text = "leader = t\ntau = 0.5\ncars = 2\nalpha = 1\nhistory.1 = t - 1\nhistory.2 = t - 2\nt_end = 1\nh = 0.01\n";
        let s: Scenario = text.parse().unwrap();
        let st = s.run().unwrap();
        assert!(st.collision.is_none());
        assert!((st.cars[1].last().y - (1.0 - 2.0)).abs() < 1e-8);
        assert!(matches!("leader = t\nbogus = 1".parse::<Scenario>(), Err(Error::Format { line: 2, .. })));
    }
}
