// Check catalog entries and instantiate one with a custom arbitrary function.

use std::error::Error;

use delaysym::catalog;
use delaysym::dods::check_algebra;
use delaysym::expr::{Bindings, Expr};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for id in ["A2_1", "A3_11", "A6_3"] {
        let c = catalog::check_entry(catalog::get(id)?, 200, 42)?;
        println!(
            "{id:<6} max invariance residual {:.2e}, negative control {:.2e}, pass {}",
            c.max_invariance(),
            c.negative_control,
            c.passes()
        );
    }

    // F(x, u2) = u2^2 - x instead of the default.
    let e = catalog::get("A3_11")?;
    let f: Expr = "u2^2 - u1".parse()?;
    let s = e.instantiate(Some(&f), None, &Bindings::new())?;
    println!("A3_11 with F = {f}: ddy = {}", s.f);
    let reports = check_algebra(&s, &e.basis, 200)?;
    if !reports.iter().all(|r| r.passes()) {
        return Err("custom A3_11 instance lost a symmetry".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
