// Count the functionally independent invariants of a few algebras.

use std::error::Error;

use delaysym::catalog;
use delaysym::expr::Bindings;
use delaysym::symmetry::{invariant_count, VectorField};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dy = VectorField::parse("0", "1")?;
    let dx = VectorField::parse("1", "0")?;
    let cases = [
        ("{∂y}", vec![dy.clone()]),
        ("{∂x, ∂y}", vec![dx, dy]),
        ("A4_1", catalog::get("A4_1")?.basis.clone()),
    ];
    for (name, fields) in cases {
        let z = invariant_count(&fields, &Bindings::new())?;
        println!("{name:<10} dim {}  rank Z {}  k = {}", z.dim_m, z.rank_z, z.k);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
