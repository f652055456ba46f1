//! The even-reflection remainder is supported within one kernel radius of
//! the boundary.

use nonlocal_ch::{Boundary, MollifierSpec, NonlocalOperator, Profile, Result, TestFunction, UniformGrid};

fn main() -> Result<()> {
    let grid = UniformGrid::interval(2048, 1.0, Boundary::Neumann)?;
    let field = TestFunction::CosPi.sample(&grid)?;
    let m = MollifierSpec::new(1, Profile::Poly23)?;
    for eps in [0.2, 0.1, 0.05, 0.025] {
        let k = m.at_scale(eps)?;
        let op = NonlocalOperator::new(&k, &grid)?;
        let half = op.interior_remainder(&field, 0.5 * k.radius())?;
        let beyond = op.interior_remainder(&field, 1.01 * k.radius())?;
        println!("eps {eps:<6} margin R/2: {half:.4e}   margin 1.01 R: {beyond:e}");
    }
    Ok(())
}
