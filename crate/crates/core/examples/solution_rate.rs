//! Distance between nonlocal and local Cahn-Hilliard trajectories as eps
//! shrinks. Coarser than the acceptance protocol so it finishes quickly.

use nonlocal_ch::experiments::smooth_initial;
use nonlocal_ch::{
    Boundary, Equation, MollifierSpec, Potential, Profile, Result, SolutionStudy, SolverConfig, UniformGrid,
};

fn main() -> Result<()> {
    let grid = UniformGrid::interval(512, 1.0, Boundary::Neumann)?;
    let potential = Potential::double_well(1.0)?;
    let mut config = SolverConfig::new(1e-5, 0.02, &potential);
    config.record_every = 40;
    let study = SolutionStudy {
        equation: Equation::NonlocalCh,
        config,
        potential,
        mollifier: MollifierSpec::new(1, Profile::Poly23)?,
        epsilons: vec![0.16, 0.08, 0.04],
        initial: smooth_initial(&grid),
        reference_refinement: 4,
    };
    let report = study.run()?;
    for table in report.tables() {
        let errors: Vec<String> = table.errors().iter().map(|e| format!("{e:.3e}")).collect();
        println!(
            "{:<16} slope {:.3}  [{}]",
            table.label,
            table.slope,
            errors.join(", ")
        );
    }
    Ok(())
}
