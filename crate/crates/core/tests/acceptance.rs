//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout.

use std::process::{Command, ExitCode};
use std::time::Instant;

use delaysym::catalog::{self, EntryKind};
use delaysym::dods::{check_invariance, DodsSystem};
use delaysym::expr::{Bindings, Expr, Var};
use delaysym::integrate::{self, Dy0, HistoryFunction};
use delaysym::linear::{self, CanonicalLinear, LinearDods};
use delaysym::reduce::{self, ReduceOptions};
use delaysym::sampling;
use delaysym::symmetry::{check_closure, invariant_count, VectorField};
use delaysym::traffic::{self, Example, TrafficParams};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|err| err.to_string())
}

fn catalog_invariance() -> Outcome {
    let t = Instant::now();
    let listed = catalog::list_entries().len();
    ensure(listed >= 19, || format!("only {listed} entries listed"))?;
    let mut worst = 0.0f64;
    let mut weakest_control = f64::INFINITY;
    let mut n = 0;
    for entry in catalog::entries().iter().filter(|e| e.kind != EntryKind::Marker) {
        let c = e(catalog::check_entry(entry, 200, sampling::DEFAULT_SEED))?;
        let m = c.max_invariance();
        ensure(m < 1e-8, || format!("{}: invariance residual {m:.3e}", entry.id))?;
        ensure(c.invariance.iter().all(|r| r.n_samples == 200), || {
            format!("{}: fewer than 200 usable samples", entry.id)
        })?;
        ensure(c.negative_control > 1e-3, || {
            format!("{}: negative control only {:.3e}", entry.id, c.negative_control)
        })?;
        worst = worst.max(m);
        weakest_control = weakest_control.min(c.negative_control);
        n += 1;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "{n} entries, max residual {worst:.2e}, weakest negative control {weakest_control:.2e}, {secs:.2} s"
    ))
}

fn algebra_structure() -> Outcome {
    let none = Bindings::new();
    let tol = 1e-9;
    for id in ["A2_1", "A2_2"] {
        let c = e(check_closure(&e(catalog::get(id))?.basis, &none))?;
        ensure((c.get(0, 1, 0) - 1.0).abs() < tol && c.get(0, 1, 1).abs() < tol, || {
            format!("{id}: [X1, X2] != X1")
        })?;
        ensure(c.max_residual < tol, || format!("{id}: span residual {:.3e}", c.max_residual))?;
    }
    let c = e(check_closure(&e(catalog::get("A3_11"))?.basis, &none))?;
    let expect = [((0, 1), 0, 1.0), ((0, 2), 1, 2.0), ((1, 2), 2, 1.0)];
    for ((i, j), k, v) in expect {
        for m in 0..3 {
            let want = if m == k { v } else { 0.0 };
            ensure((c.get(i, j, m) - want).abs() < tol, || {
                format!("A3_11: c[{i}{j}][{m}] = {}", c.get(i, j, m))
            })?;
        }
    }
    for id in ["A2_3", "A2_4"] {
        let c = e(check_closure(&e(catalog::get(id))?.basis, &none))?;
        ensure(c.is_abelian(tol), || format!("{id} is not abelian"))?;
    }
    let mut jac = 0.0f64;
    for entry in catalog::entries().iter().filter(|e| e.dim() >= 3) {
        let c = e(catalog::check_entry(entry, 20, sampling::DEFAULT_SEED))?;
        jac = jac.max(c.jacobi);
    }
    ensure(jac < 1e-10, || format!("Jacobi residual {jac:.3e}"))?;
    Ok(format!("s(2,1), sl(2,R) and abelian patterns; max Jacobi residual {jac:.2e}"))
}

fn invariant_counts() -> Outcome {
    let cases = [("A1_1", 6), ("A2_4", 5), ("A4_1", 3)];
    let mut parts = Vec::new();
    for (id, k) in cases {
        let entry = e(catalog::get(id))?;
        let z = e(invariant_count(&entry.basis, &Bindings::new()))?;
        ensure(z.k == k, || format!("{id}: k = {}, expected {k}", z.k))?;
        // Two of the invariants are taken by ddy = f and xm = g.
        ensure(entry.slots.len() == k - 2, || {
            format!("{id}: {} slots for k = {k}", entry.slots.len())
        })?;
        parts.push(format!("{id} k={}", z.k));
    }
    let one = vec![e(VectorField::parse("0", "1"))?];
    let two = vec![e(VectorField::parse("1", "0"))?, e(VectorField::parse("0", "1"))?];
    ensure(e(invariant_count(&one, &Bindings::new()))?.k == 6, || "{∂y}".into())?;
    ensure(e(invariant_count(&two, &Bindings::new()))?.k == 5, || "{∂x,∂y}".into())?;
    Ok(parts.join(", "))
}

fn random_linear(rng: &mut sampling::SampleRng) -> Result<LinearDods, String> {
    let mut c = || sampling::uniform(rng, (-1.0, 1.0));
    let coeffs = [
        format!("{} + {}*x", c(), c()),
        format!("{} + {}*sin(x)", 1.5 + c().abs(), 0.3 * c()),
        format!("{}*x^2 + {}", c(), c()),
        format!("{}*exp(-x) + {}", c(), c()),
        "0".to_string(),
    ];
    let tau = 0.5 + c().abs();
    let refs = [&coeffs[0], &coeffs[1], &coeffs[2], &coeffs[3], &coeffs[4]].map(|s| s.as_str());
    e(LinearDods::parse(refs, &format!("x - {tau}"), (0.5, 2.5)))
}

fn linear_theory() -> Outcome {
    // (a) scaling invariance on random homogeneous systems
    let mut rng = sampling::rng(sampling::DEFAULT_SEED);
    let y_dy = e(VectorField::parse("0", "y"))?;
    let mut worst_a = 0.0f64;
    for _ in 0..5 {
        let l = random_linear(&mut rng)?;
        let r = e(check_invariance(&e(l.to_system())?, &y_dy, 200))?;
        worst_a = worst_a.max(r.max_residual());
    }
    ensure(worst_a < 1e-10, || format!("(a) y∂y residual {worst_a:.3e}"))?;

    // (b) integrating phi1 + 2 phi2 equals combining the two solutions
    let l = e(LinearDods::parse(["0.3", "0.5", "-1", "0.2*x", "0"], "x - 1", (0.0, 3.0)))?;
    let sys = e(l.to_system())?;
    let run = |phi: &str| -> Result<integrate::Trajectory, String> {
        let h = e(HistoryFunction::symbolic(e(phi.parse::<Expr>())?, -1.0, 0.0))?;
        e(integrate::solve(&sys, &h, Dy0::FromPhi, 3.0, 1e-3))
    };
    let t1 = run("cos(x)")?;
    let t2 = run("1 + x^2")?;
    let t3 = run("cos(x) + 2*(1 + x^2)")?;
    let comb = e(t1.combine(1.0, &t2, 2.0))?;
    let dev_b = t3
        .nodes
        .iter()
        .zip(&comb.nodes)
        .map(|(a, b)| (a.y - b.y).abs().max((a.dy - b.dy).abs()))
        .fold(0.0f64, f64::max);
    ensure(dev_b < 1e-9, || format!("(b) superposition deviation {dev_b:.3e}"))?;

    // (c) constant coefficients give constant xi
    for coeffs in [
        ["0.4", "0.5", "1", "-0.3", "0"],
        ["0", "1", "0.2", "0", "0"],
        ["-0.7", "0", "0.1", "2", "0"],
    ] {
        let l = e(LinearDods::parse(coeffs, "x - 0.8", (0.5, 2.5)))?;
        let out = e(linear::detect_extra_symmetry(&l))?;
        let z = out.symmetry().ok_or_else(|| format!("(c) no Z for {coeffs:?}"))?;
        let at = |x: f64| z.xi.eval(&Bindings::new().with_var(Var::X, x)).unwrap_or(f64::NAN);
        let spread = (0..=10).map(|i| (at(0.5 + 0.2 * i as f64) - at(0.5)).abs()).fold(0.0, f64::max);
        ensure(spread < 1e-12, || format!("(c) xi varies by {spread:.3e}"))?;
    }

    // (d) characteristic roots
    let c1 = e(CanonicalLinear::new(0.0, 1.0, 0.0, 1.0))?;
    let r1 = linear::characteristic_roots(&c1, (-3.0, 3.0), 600);
    ensure(
        r1.len() == 2 && (r1[0] + 1.0).abs() < 1e-12 && (r1[1] - 1.0).abs() < 1e-12,
        || format!("(d) roots of (0,1,0,1): {r1:?}"),
    )?;
    let c2 = e(CanonicalLinear::new(0.0, 0.0, 1.0, 1.0))?;
    let r2 = linear::characteristic_roots(&c2, (-10.0, 10.0), 4000);
    let pos: Vec<f64> = r2.iter().copied().filter(|&l| l > 0.0).collect();
    ensure(pos.len() == 1, || format!("(d) positive roots of (0,0,1,1): {pos:?}"))?;
    let res_d = (pos[0] * pos[0] * pos[0].exp() - 1.0).abs();
    ensure(res_d < 1e-10, || format!("(d) |λ²e^λ - 1| = {res_d:.3e}"))?;

    // (e) every returned root is an exponential solution
    let mut worst_e = 0.0f64;
    for (c, r) in [(c1, &r1), (c2, &r2)] {
        for &l in r.iter() {
            worst_e = worst_e.max(linear::verify_exponential_solution(&c, l));
        }
    }
    ensure(worst_e < 1e-10, || format!("(e) exponential residual {worst_e:.3e}"))?;
    Ok(format!(
        "(a) {worst_a:.1e} (b) {dev_b:.1e} (c) constant xi (d) λ = {:.12} (e) {worst_e:.1e}",
        pos[0]
    ))
}

fn compatibility() -> Outcome {
    let xs: Vec<f64> = (0..50).map(|i| 0.5 + 2.0 * i as f64 / 49.0).collect();
    let p = |s: &str| s.parse::<Expr>().map_err(|err| err.to_string());
    let r1 = e(linear::compatibility_residual(&p("x - 0.7")?, &p("1.3")?, &xs))?;
    let r2 = e(linear::compatibility_residual(&p("0.5*x")?, &p("2/x")?, &xs))?;
    let r3 = e(linear::compatibility_residual(&p("x - 1")?, &p("x")?, &xs))?;
    ensure(r1 < 1e-12 && r2 < 1e-12, || format!("matched residuals {r1:.3e}, {r2:.3e}"))?;
    ensure(r3 >= 0.5, || format!("mismatched residual {r3:.3e}"))?;
    Ok(format!("{r1:.1e}, {r2:.1e}; mismatched {r3:.3}"))
}

fn integrator() -> Outcome {
    let t = Instant::now();
    let s = e(DodsSystem::parse("ym", "x - 1", Bindings::new()))?;
    let phi = e(HistoryFunction::symbolic(Expr::var(Var::X), -1.0, 0.0))?;
    let tr = e(integrate::solve(&s, &phi, Dy0::Value(1.0), 1.0, 1e-3))?;
    let y1 = tr.last().y;
    let err = (y1 - 2.0 / 3.0).abs();
    ensure(err < 1e-8, || format!("y(1) error {err:.3e}"))?;

    let sin = e(HistoryFunction::symbolic(e("sin(x)".parse::<Expr>())?, -1.0, 0.0))?;
    let at2 = |h: f64| -> Result<f64, String> { Ok(e(integrate::solve(&s, &sin, Dy0::FromPhi, 2.0, h))?.last().y) };
    let (a, b, c) = (at2(0.02)?, at2(0.01)?, at2(0.005)?);
    let order = ((a - b) / (b - c)).abs().log2();
    ensure((order - 4.0).abs() <= 0.3, || format!("observed order {order:.3}"))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("y(1) error {err:.1e}, observed order {order:.3}, {secs:.2} s"))
}

fn traffic_example1() -> Outcome {
    let p = TrafficParams::example1(1.0, 0.5, -1.0);
    let s = e(traffic::build_two_car(&p))?;
    let x = e(traffic::example_symmetry(&p))?;
    let inv = e(check_invariance(&s, &x, 200))?;
    ensure(inv.passes_at(1e-9), || format!("symmetry residual {:.3e}", inv.max_residual()))?;
    let cmp = e(traffic::compare_exact_vs_numeric(&p, -1.0, 2.5, 1e-3))?;
    ensure(cmp.max_abs < 1e-9, || format!("follower leaves x = vt + A by {:.3e}", cmp.max_abs))?;
    // The platoon integrator from the same history gives the same line.
    let hist = e(HistoryFunction::symbolic(e("x - 1".parse::<Expr>())?, -0.5, 0.0))?;
    let st = e(traffic::simulate_platoon(&p, &[hist], 2.5, 1e-3))?;
    let dev = st.cars[0]
        .nodes
        .iter()
        .map(|n| (n.y - (n.x - 1.0)).abs())
        .fold(0.0f64, f64::max);
    ensure(dev < 1e-9, || format!("platoon deviation {dev:.3e}"))?;
    Ok(format!("invariance {:.1e}, deviation {:.1e}", inv.max_residual(), cmp.max_abs.max(dev)))
}

fn traffic_examples23() -> Outcome {
    let mut notes = Vec::new();
    for p in [e(TrafficParams::example(2))?, e(TrafficParams::example(3))?] {
        let id = p.example.map(|x| x.id()).unwrap_or(0);
        let k = match p.example {
            Some(Example::Two { k, .. }) | Some(Example::Three { k, .. }) => k,
            _ => unreachable!(),
        };
        let s = e(traffic::build_two_car(&p))?;
        let cs = e(traffic::solve_constraint(&p))?;
        ensure(!cs.roots.is_empty(), || format!("example {id}: no roots"))?;
        let interval = traffic::default_interval(&p);
        for r in &cs.roots {
            let cv = traffic::constraint_value(&p, r.a).unwrap_or(f64::INFINITY).abs();
            ensure(cv < 1e-12, || format!("example {id}: constraint residual {cv:.3e} at A = {}", r.a))?;
            ensure(0.0 < r.a && r.a < k, || format!("example {id}: A = {} outside (0, k)", r.a))?;
            let sol = e(traffic::invariant_solution(&p, r.a))?;
            let chk = reduce::verify_invariant_solution(&s, &sol, interval);
            ensure(chk.grid < 1e-10, || format!("example {id}: grid residual {:.3e}", chk.grid))?;
            let cmp = e(traffic::compare_exact_vs_numeric(&p, r.a, interval.1, 1e-3))?;
            ensure(cmp.max_rel < 1e-6, || format!("example {id}: relative deviation {:.3e}", cmp.max_rel))?;
            notes.push(format!("ex{id} A={:.10}", r.a));
        }
        if id == 3 {
            let cf = traffic::example3_closed_form(&p).ok_or("no closed form")?;
            let d = (cs.roots[0].a - cf).abs();
            ensure(d < 1e-12, || format!("closed form mismatch {d:.3e}"))?;
        }
    }
    let bad = TrafficParams::example2(1.0, 2.0, 1.0, 0.25, 0.0);
    let cs = e(traffic::solve_constraint(&bad))?;
    ensure(cs.roots.is_empty(), || format!("alpha > 0 regime returned {:?}", cs.roots))?;
    ensure(cs.warning.as_deref().is_some_and(|w| w.contains("collision")), || {
        "no collision warning".into()
    })?;
    notes.push("alpha>0 regime: no root, collision warning".into());
    Ok(notes.join(", "))
}

fn reduction() -> Outcome {
    let mut worst = 0.0f64;
    for id in 1..=3 {
        let p = e(TrafficParams::example(id))?;
        let x = e(traffic::example_symmetry(&p))?;
        let pair = e(reduce::invariants_of(&x, &Bindings::new()))?;
        let c = e(reduce::check_invariants(&x, &pair, &Bindings::new(), traffic::default_interval(&p), 200, 42))?;
        ensure(c.passes(), || format!("example {id}: {c:?}"))?;
        worst = worst.max(c.max_annihilation);
    }
    let p = TrafficParams::example1(1.0, 0.5, -1.0);
    let s = e(traffic::build_two_car(&p))?;
    let x = e(traffic::example_symmetry(&p))?;
    let pair = e(reduce::invariants_of(&x, &Bindings::new()))?;
    let sol = e(reduce::reduce_and_solve(&s, &x, &pair, &ReduceOptions::new((0.0, 2.5))))?;
    ensure(sol.free.contains(&"A"), || format!("free constants {:?}", sol.free))?;
    ensure((sol.b - 0.5).abs() < 1e-10, || format!("B = {}", sol.b))?;
    Ok(format!("annihilation {worst:.1e}, example 1 free = {}", sol.free.join(",")))
}

fn determinism() -> Outcome {
    let run = || -> Result<(Vec<u8>, Option<i32>), String> {
        let o = e(Command::new(env!("CARGO_BIN_EXE_delaysym"))
            .args(["traffic", "--example", "3", "--seed", "42"])
            .output())?;
        Ok((o.stdout, o.status.code()))
    };
    let (a, ca) = run()?;
    let (b, cb) = run()?;
    ensure(ca == Some(0) && cb == Some(0), || format!("exit codes {ca:?}, {cb:?}"))?;
    ensure(!a.is_empty() && a == b, || "reports differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("catalog invariance", catalog_invariance),
        ("algebra structure", algebra_structure),
        ("invariant counts", invariant_counts),
        ("linear theory", linear_theory),
        ("compatibility condition", compatibility),
        ("integrator", integrator),
        ("traffic example 1", traffic_example1),
        ("traffic examples 2-3", traffic_examples23),
        ("reduction machinery", reduction),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
