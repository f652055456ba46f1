//! Local and nonlocal Allen-Cahn with a logarithmic potential.

use nonlocal_ch::experiments::smooth_initial;
use nonlocal_ch::potentials::DEFAULT_CLAMP;
use nonlocal_ch::{
    Boundary, Equation, MollifierSpec, Potential, Profile, Result, Solver, SolverConfig, UniformGrid,
};

fn main() -> Result<()> {
    let grid = UniformGrid::interval(256, 1.0, Boundary::Neumann)?;
    let potential = Potential::logarithmic(0.3, 1.0, DEFAULT_CLAMP)?;
    let kernel = MollifierSpec::new(1, Profile::Poly23)?.at_scale(0.08)?;
    let c0 = smooth_initial(&grid);
    for eq in [Equation::LocalAc, Equation::NonlocalAc] {
        let mut cfg = SolverConfig::new(1e-4, 0.5, &potential);
        cfg.record_every = 1000;
        let solver = Solver::new(eq, &grid, cfg, potential, eq.is_nonlocal().then_some(&kernel))?;
        let rec = solver.run(&c0)?;
        println!("{eq}");
        for ((t, m), e) in rec.times.iter().zip(&rec.mass).zip(&rec.energy) {
            println!("  t {t:.2}  mean {m:+.5}  energy {e:.6}");
        }
        println!("  clamp events {}", rec.clamp_events);
    }
    Ok(())
}
