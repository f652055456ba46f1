//! Normalization and moments of the mollifier in one and two dimensions.

use nonlocal_ch::kernel::normalization_target;
use nonlocal_ch::{MollifierSpec, Profile, Result};

fn main() -> Result<()> {
    for dim in [1, 2] {
        let spec = MollifierSpec::new(dim, Profile::Poly23)?;
        let k = spec.at_scale(0.1)?;
        println!("n = {dim}, C = {:.6}", spec.norm_constant());
        println!(
            "  radial mass {:.15} (target {:.15})",
            k.radial_mass(),
            normalization_target(dim)
        );
        for axis in 0..dim {
            println!(
                "  axis {axis}: first moment {:+.2e}, second moment {:.12}",
                k.moment_first(axis)?,
                k.moment_second(axis)?
            );
        }
        println!("  total mass {:.6e}", k.total_mass());
    }
    Ok(())
}
