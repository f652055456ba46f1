//! Terms of the energy inequality for the error `c_eps - c` over time, and the
//! smallest constant that makes it hold at every recorded time.

use nonlocal_ch::experiments::{gronwall_trace, smooth_initial};
use nonlocal_ch::{
    Boundary, Equation, MollifierSpec, Potential, Profile, Result, SolutionStudy, SolverConfig, UniformGrid,
};

fn main() -> Result<()> {
    let grid = UniformGrid::interval(512, 1.0, Boundary::Neumann)?;
    let potential = Potential::double_well(1.0)?;
    let mut config = SolverConfig::new(1e-5, 0.02, &potential);
    config.record_every = 100;
    let study = SolutionStudy {
        equation: Equation::NonlocalCh,
        config,
        potential,
        mollifier: MollifierSpec::new(1, Profile::Poly23)?,
        epsilons: vec![0.1],
        initial: smooth_initial(&grid),
        reference_refinement: 4,
    };
    let reference = study.reference()?;
    let run = study.nonlocal(0.1)?;
    let trace = gronwall_trace(&study.mollifier.at_scale(0.1)?, &run, &reference)?;
    trace.write_csv(std::io::stdout().lock())?;
    println!("constant {:.4e}", trace.constant);
    Ok(())
}
