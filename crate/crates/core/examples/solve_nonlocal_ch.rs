//! Nonlocal Cahn-Hilliard from small random data: mass stays put while the
//! energy decays through spinodal decomposition. The well depth is large
//! enough for several modes of the unit box to be unstable.

use nonlocal_ch::experiments::random_field;
use nonlocal_ch::{
    Boundary, Equation, MollifierSpec, Potential, Profile, Result, Solver, SolverConfig, UniformGrid,
};

fn main() -> Result<()> {
    let grid = UniformGrid::interval(512, 1.0, Boundary::Neumann)?;
    let potential = Potential::double_well(50.0)?;
    let kernel = MollifierSpec::new(1, Profile::Poly23)?.at_scale(0.05)?;
    let mut cfg = SolverConfig::new(1e-6, 0.01, &potential);
    cfg.record_every = 1000;
    let solver = Solver::new(Equation::NonlocalCh, &grid, cfg, potential, Some(&kernel))?;
    let rec = solver.run(&random_field(&grid, 3, 0.05))?;
    for ((t, m), e) in rec.times.iter().zip(&rec.mass).zip(&rec.energy) {
        println!("t {t:.4}  mass {m:+.3e}  energy {e:.6e}");
    }
    println!("final max |c| = {:.4}", rec.final_state.max_abs());
    Ok(())
}
