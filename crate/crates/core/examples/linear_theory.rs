// Extra symmetry of a linear system, its canonical form and exponential
// solutions.

use std::error::Error;

use delaysym::linear::{self, LinearDods};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // ddy = 0.4 dy + 0.5 dym + y - 0.3 ym, xm = x - 0.8
    let l = LinearDods::parse(["0.4", "0.5", "1", "-0.3", "0"], "x - 0.8", (0.5, 2.5))?;
    let out = linear::detect_extra_symmetry(&l)?;
    let z = out.symmetry().ok_or("expected an extra symmetry")?;
    println!("K = {} ({:?}), xi = {}", z.k, z.k_used, z.xi);
    println!("Z invariance residual {:.2e}", z.invariance.max_residual());

    let fit = linear::canonical_transform(&l, z, 12)?;
    let c = fit.canonical;
    println!(
        "canonical: alpha = {:.10}, beta = {:.10}, gamma = {:.10}, C = {}",
        c.alpha, c.beta, c.gamma, c.c
    );
    for lambda in linear::characteristic_roots(&c, (-10.0, 10.0), 4000) {
        println!(
            "lambda = {lambda:.12}, exponential residual {:.2e}",
            linear::verify_exponential_solution(&c, lambda)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
