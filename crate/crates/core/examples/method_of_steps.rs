// Integrate ddy = y(x - 1) with history y = x and compare with the
// hand-computed value y(1) = 2/3.

use std::error::Error;

use delaysym::dods::DodsSystem;
use delaysym::expr::Bindings;
use delaysym::integrate::{self, Dy0, HistoryFunction};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let s = DodsSystem::parse("ym", "x - 1", Bindings::new())?;
    let phi = HistoryFunction::symbolic("x".parse()?, -1.0, 0.0)?;
    let t = integrate::solve(&s, &phi, Dy0::Value(1.0), 2.0, 1e-3)?;
    let (y1, _) = t.interpolate(1.0)?;
    println!("y(1) = {y1:.15}  (error {:.2e})", (y1 - 2.0 / 3.0).abs());
    let (y2, dy2) = t.interpolate(2.0)?;
    println!("y(2) = {y2:.12}, y'(2) = {dy2:.12}");
    println!("jump in y'' at breaking points: {:.3e}", t.max_derivative_jump());
    let r = integrate::residual_on_trajectory(&s, &t, 100)?;
    println!("midpoint residual {:.2e}", r.dode);
    if (y1 - 2.0 / 3.0).abs() > 1e-8 {
        return Err("y(1) off the oracle".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
