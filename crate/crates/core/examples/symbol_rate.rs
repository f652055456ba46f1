//! The Fourier symbol of the nonlocal operator approaches `|xi|^2` at rate eps.

use nonlocal_ch::experiments::symbol_study;
use nonlocal_ch::{MollifierSpec, Profile, Result};

fn main() -> Result<()> {
    let eps = [0.2, 0.1, 0.05, 0.025];
    for dim in [1, 2] {
        let table = symbol_study(&MollifierSpec::new(dim, Profile::Poly23)?, 8, &eps)?;
        println!("n = {dim}");
        for p in &table.points {
            println!(
                "  eps {:<6} max |sigma - |xi|^2| / |xi|^3 = {:.4e}",
                p.epsilon, p.error
            );
        }
        println!("  slope {:.3}", table.slope);
    }
    Ok(())
}
