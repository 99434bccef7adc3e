//! Metric mean dimension and mean box dimension of the built-in families.

use anacomp::harness::family_dimensions;
use anacomp::model::{DyadicGrid, SubshiftFamily};

fn main() -> anacomp::error::Result<()> {
    let grid = DyadicGrid::new(5)?;
    let families = [
        SubshiftFamily::sparse(4, 1),
        SubshiftFamily::sparse(2, 1),
        SubshiftFamily::full_binary(),
        SubshiftFamily::full_grid(),
        SubshiftFamily::VanishingCubes { m_max: 4 },
        SubshiftFamily::ReciprocalAlphabet { n_max: 32 },
    ];
    println!("family,mmdim,mbdim");
    for fam in &families {
        let (mm, mb) = family_dimensions(fam, grid, 50_000_000)?;
        println!("{},{:.4},{:.4}", fam.label(), mm.value, mb.value);
    }
    Ok(())
}
