//! FFT application against the O(N^2) direct sum, plus the quadratic-form
//! identity `<L u, u> = 1/2 int int J |u(x) - u(y)|^2`.

use nonlocal_ch::experiments::{factor_audit, oracle_gap, random_field};
use nonlocal_ch::{Boundary, MollifierSpec, Profile, Result, UniformGrid};

fn main() -> Result<()> {
    for (dim, cells, eps) in [(1, 256, 0.1), (2, 64, 0.15)] {
        let m = MollifierSpec::new(dim, Profile::Poly23)?;
        for boundary in [Boundary::Neumann, Boundary::Periodic] {
            let grid = UniformGrid::new(&vec![cells; dim], &vec![1.0; dim], boundary)?;
            let gap = oracle_gap(&m.at_scale(eps)?, &random_field(&grid, 7, 1.0))?;
            println!("n = {dim} {boundary:>8}: relative gap {gap:.2e}");
        }
        let grid = UniformGrid::new(&vec![32; dim], &vec![1.0; dim], Boundary::Neumann)?;
        let audit = factor_audit(&m.at_scale(0.3)?, &random_field(&grid, 8, 1.0))?;
        println!("n = {dim} audit ratio {:.15}", audit.ratio);
    }
    Ok(())
}
