// Parse an expression over the delayed jet, differentiate it and evaluate.

use std::error::Error;

use delaysym::expr::{Bindings, Expr, Var};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let e: Expr = "sin(x) * y^2 + exp(dym) / (x - xm)".parse()?;
    let at = Bindings::new()
        .with_var(Var::X, 1.0)
        .with_var(Var::Xm, 0.5)
        .with_var(Var::Y, 2.0)
        .with_var(Var::Dym, 0.0);
    println!("e        = {e}");
    for v in [Var::X, Var::Y, Var::Xm, Var::Dym] {
        let d = e.diff_simplified(v);
        println!("de/d{:<4} = {d}  ->  {:.12}", v.name(), d.eval(&at)?);
    }
    let dy = e.diff_simplified(Var::Y).eval(&at)?;
    let exact = 2.0 * 2.0 * 1f64.sin();
    if (dy - exact).abs() > 1e-14 {
        return Err(format!("de/dy = {dy}, expected {exact}").into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
