// Prolong a point field to the delayed jet and compute structure constants.

use std::error::Error;

use delaysym::expr::Bindings;
use delaysym::symmetry::{check_closure, lie_bracket, VectorField};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let x = VectorField::parse("2*x*y", "y^2")?;
    let pr = x.prolong();
    let names = ["x", "y", "xm", "ym", "dy", "dym", "ddy"];
    for (n, c) in names.iter().zip(pr.coefficients()) {
        println!("coefficient of ∂/∂{n:<4}: {c}");
    }

    let basis = vec![
        VectorField::parse("0", "1")?,
        VectorField::parse("x", "y")?,
        VectorField::parse("2*x*y", "y^2")?,
    ];
    println!("[X1, X3] = {}", lie_bracket(&basis[0], &basis[2]));
    let c = check_closure(&basis, &Bindings::new())?;
    for (i, j, k, v) in c.nonzero(1e-9) {
        if i < j {
            println!("[X{}, X{}] has {v:+.3} X{}", i + 1, j + 1, k + 1);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
