// The three car-following examples: symmetry, constraint on the invariant
// solution and comparison with the integrator.

use std::error::Error;

use delaysym::dods::check_invariance;
use delaysym::traffic::{self, TrafficParams};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for id in 1..=3 {
        let p = TrafficParams::example(id)?;
        let s = traffic::build_two_car(&p)?;
        let x = traffic::example_symmetry(&p)?;
        let inv = check_invariance(&s, &x, 200)?;
        println!("example {id}: X = {}, invariance {:.2e}", x.label, inv.max_residual());
        let cs = traffic::solve_constraint(&p)?;
        let roots: Vec<f64> = if cs.free_a { vec![-1.0] } else { cs.roots.iter().map(|r| r.a).collect() };
        let (_, t_end) = traffic::default_interval(&p);
        for a in roots {
            let cmp = traffic::compare_exact_vs_numeric(&p, a, t_end, 1e-3)?;
            let sol = traffic::invariant_solution(&p, a)?;
            println!("  y = {}  max relative deviation {:.2e}", sol.h(), cmp.max_rel);
        }
    }
    // Attractive interaction with n1 > 1 has no admissible solution.
    let p = TrafficParams::example2(1.0, 2.0, 1.0, 0.25, 0.0);
    if let Some(w) = traffic::solve_constraint(&p)?.warning {
        println!("example 2 with alpha = 1: {w}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
