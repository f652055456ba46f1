//! `||L_eps c + Delta c||` on the torus and in the box. The boundary layer in
//! the box costs half an order unless the test function is flat there.

use nonlocal_ch::experiments::operator_rate_study;
use nonlocal_ch::{Boundary, MollifierSpec, Profile, Result, TestFunction, UniformGrid};

fn main() -> Result<()> {
    let eps = [0.2, 0.1, 0.05, 0.025];
    let m = MollifierSpec::new(1, Profile::Poly23)?;
    let cases = [
        (Boundary::Periodic, TestFunction::SinPeriodic),
        (Boundary::Neumann, TestFunction::CosPi),
        (Boundary::Neumann, TestFunction::Flat),
    ];
    for (boundary, func) in cases {
        let grid = UniformGrid::interval(4096, 1.0, boundary)?;
        let table = operator_rate_study(&grid, &m, &func.sample(&grid)?, &eps)?;
        let errors: Vec<String> = table.errors().iter().map(|e| format!("{e:.3e}")).collect();
        println!(
            "{boundary:>8} {func:<12} slope {:.3}  [{}]",
            table.slope,
            errors.join(", ")
        );
    }
    Ok(())
}
