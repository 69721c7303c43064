use proptest::prelude::*;

use delaysym::catalog;
use delaysym::dods::{check_invariance, DodsSystem};
use delaysym::expr::{Bindings, Expr, Var};
use delaysym::integrate::{self, hermite, Dy0, HistoryFunction};
use delaysym::linear::LinearDods;
use delaysym::reduce;
use delaysym::symmetry::{lie_bracket, VectorField};
use delaysym::traffic::{self, TrafficParams};

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("dy".to_string()),
        Just("ym".to_string()),
        (0.5f64..2.0).prop_map(|c| format!("{c}")),
    ]
}

fn expr_text() -> impl Strategy<Value = String> {
    leaf().prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (1 + ({b})^2))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("arctan({a})")),
            inner.prop_map(|a| format!("({a})^2")),
        ]
    })
}

fn point(x: f64, y: f64, dy: f64, ym: f64) -> Bindings {
    Bindings::new()
        .with_var(Var::X, x)
        .with_var(Var::Y, y)
        .with_var(Var::Dy, dy)
        .with_var(Var::Ym, ym)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn display_parse_round_trip(text in expr_text(), x in 0.5f64..2.0, y in 0.5f64..2.0) {
        let e: Expr = text.parse().unwrap();
        let back: Expr = e.to_string().parse().unwrap();
        let b = point(x, y, 1.3, 0.7);
        prop_assert_eq!(e.eval(&b).unwrap(), back.eval(&b).unwrap());
    }

    #[test]
    fn simplify_preserves_values(text in expr_text(), x in 0.5f64..2.0, y in 0.5f64..2.0) {
        let e: Expr = text.parse().unwrap();
        let b = point(x, y, 1.1, 0.9);
        let (a, s) = (e.eval(&b).unwrap(), e.simplify().eval(&b).unwrap());
        prop_assert!(close(a, s, 1e-12), "{} vs {}", a, s);
    }

    #[test]
    fn derivative_matches_central_difference(text in expr_text(), x in 0.6f64..1.9, y in 0.6f64..1.9) {
        let e: Expr = text.parse().unwrap();
        let d = e.diff_simplified(Var::X).eval(&point(x, y, 1.2, 0.8)).unwrap();
        let h = 1e-5;
        let fd = (e.eval(&point(x + h, y, 1.2, 0.8)).unwrap() - e.eval(&point(x - h, y, 1.2, 0.8)).unwrap()) / (2.0 * h);
        prop_assert!(close(d, fd, 1e-5), "{}: {} vs {}", text, d, fd);
    }

    #[test]
    fn bracket_is_antisymmetric(c in proptest::collection::vec(-2.0f64..2.0, 8), x in 0.5f64..2.5, y in 0.5f64..2.5) {
        let a = VectorField::parse(&format!("{} + {}*x*y", c[0], c[1]), &format!("{}*y^2 + {}", c[2], c[3])).unwrap();
        let b = VectorField::parse(&format!("{}*sin(x) + {}", c[4], c[5]), &format!("{}*x + {}*y", c[6], c[7])).unwrap();
        let p = Bindings::new();
        let (u, v) = lie_bracket(&a, &b).eval_at(x, y, &p).unwrap();
        let (s, t) = lie_bracket(&b, &a).eval_at(x, y, &p).unwrap();
        prop_assert!((u + s).abs() < 1e-12 && (v + t).abs() < 1e-12);
    }

    #[test]
    fn hermite_reproduces_cubics(c in proptest::collection::vec(-3.0f64..3.0, 4), t in 0.0f64..1.0) {
        let p = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let dp = |x: f64| c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x;
        let (xa, xb) = (0.3, 1.1);
        let x = xa + t * (xb - xa);
        let (y, dy) = hermite(xa, p(xa), dp(xa), xb, p(xb), dp(xb), x);
        prop_assert!((y - p(x)).abs() < 1e-12 && (dy - dp(x)).abs() < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaling_is_a_symmetry_of_homogeneous_linear_systems(c in proptest::collection::vec(-1.0f64..1.0, 6), tau in 0.3f64..1.5) {
        let coeffs = [
            format!("{}*x", c[0]),
            format!("{} + {}*cos(x)", 1.0 + c[1].abs(), 0.5 * c[2]),
            format!("{}", c[3]),
            format!("{}*exp(-x)", c[4]),
            "0".to_string(),
        ];
        let refs = [&coeffs[0], &coeffs[1], &coeffs[2], &coeffs[3], &coeffs[4]].map(|s| s.as_str());
        let l = LinearDods::parse(refs, &format!("x - {tau}"), (0.5, 2.5)).unwrap();
        let r = check_invariance(&l.to_system().unwrap(), &VectorField::parse("0", "y").unwrap(), 50).unwrap();
        prop_assert!(r.max_residual() < 1e-10, "{:?}", r);
    }

    #[test]
    fn integrator_is_linear_on_linear_systems(c in -2.0f64..2.0, d in -2.0f64..2.0) {
        let s = DodsSystem::parse("0.3*dy - dym + 0.5*ym", "x - 1", Bindings::new()).unwrap();
        let solve = |phi: &str| {
            let h = HistoryFunction::symbolic(phi.parse().unwrap(), -1.0, 0.0).unwrap();
            integrate::solve(&s, &h, Dy0::FromPhi, 2.0, 0.01).unwrap()
        };
        let a = solve("cos(x)");
        let b = solve("x^2 - 1");
        let both = solve(&format!("{c}*cos(x) + {d}*(x^2 - 1)"));
        let comb = a.combine(c, &b, d).unwrap();
        for (p, q) in both.nodes.iter().zip(&comb.nodes) {
            prop_assert!((p.y - q.y).abs() < 1e-11, "{} vs {}", p.y, q.y);
        }
    }

    #[test]
    fn example1_generator_and_line_solutions(v in 0.5f64..2.0, tau in 0.2f64..1.0, a in -2.0f64..-0.2) {
        let p = TrafficParams::example1(v, tau, a);
        let s = traffic::build_two_car(&p).unwrap();
        let x = traffic::example_symmetry(&p).unwrap();
        prop_assert!(check_invariance(&s, &x, 100).unwrap().passes_at(1e-9));
        let sol = traffic::invariant_solution(&p, a).unwrap();
        let g = reduce::grid_residual(&s, &sol.pair, sol.a, sol.b, traffic::default_interval(&p));
        prop_assert!(g < 1e-10, "grid residual {}", g);
    }

    #[test]
    fn platoon_order_follows_initial_offsets(gaps in proptest::collection::vec(0.3f64..1.5, 3)) {
        let p = TrafficParams::example1(1.0, 0.5, -1.0);
        let mut offset = 0.0;
        let mut offsets = Vec::new();
        for g in &gaps {
            offset -= g;
            offsets.push(offset);
        }
        let hist: Vec<HistoryFunction> = offsets
            .iter()
            .map(|o| HistoryFunction::symbolic(format!("x + {o}").parse().unwrap(), -0.5, 0.0).unwrap())
            .collect();
        let st = traffic::simulate_platoon(&p, &hist, 2.5, 0.01).unwrap();
        prop_assert!(st.collision.is_none());
        let want = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((st.min_headway().unwrap() - want).abs() < 1e-9);
        for j in 0..st.cars[0].nodes.len() {
            for i in 1..st.count() {
                prop_assert!(st.cars[i - 1].nodes[j].y > st.cars[i].nodes[j].y);
            }
        }
    }

    #[test]
    fn example3_quadratic_root_matches_closed_form(eps in 0.1f64..1.0, tau in 0.2f64..1.5, k in 0.5f64..2.0) {
        let p = TrafficParams::example3(1.0, 2.0, eps, tau, k);
        let sol = traffic::solve_constraint(&p).unwrap();
        let cf = traffic::example3_closed_form(&p).unwrap();
        prop_assert_eq!(sol.roots.len(), 1);
        prop_assert!((sol.roots[0].a - cf).abs() < 1e-12);
        prop_assert!(0.0 < cf && cf < k);
    }

    #[test]
    fn catalog_template_holds_for_other_functions(c in proptest::collection::vec(-1.0f64..1.0, 3)) {
        let e = catalog::get("A2_4").unwrap();
        let f: Expr = format!("{}*u1 + {}*sin(u2) + u3*u3*{}", c[0], c[1], c[2]).parse().unwrap();
        let s = e.instantiate(Some(&f), None, &Bindings::new()).unwrap();
        for x in &e.basis {
            prop_assert!(check_invariance(&s, x, 50).unwrap().passes());
        }
    }
}
