//! Nonlocal energies of `cos(pi x)` approach the Dirichlet energy `pi^2 / 4`.

use nonlocal_ch::experiments::energy_rate_study;
use nonlocal_ch::{Boundary, MollifierSpec, Profile, Result, TestFunction, UniformGrid};

fn main() -> Result<()> {
    let grid = UniformGrid::interval(1024, 1.0, Boundary::Neumann)?;
    let field = TestFunction::CosPi.sample(&grid)?;
    let (table, target) = energy_rate_study(
        &grid,
        &MollifierSpec::new(1, Profile::Poly23)?,
        &field,
        &[0.2, 0.1, 0.05, 0.025],
    )?;
    println!(
        "limit {target:.12} (pi^2/4 = {:.12})",
        std::f64::consts::PI.powi(2) / 4.0
    );
    for p in &table.points {
        println!("eps {:<6} |E_eps - E| = {:.4e}", p.epsilon, p.error);
    }
    println!(
        "slope {:.3}, strictly decreasing: {}",
        table.slope,
        table.strictly_decreasing()
    );
    Ok(())
}
