//! Encode a sparse signal with the support-and-signature codec and decode it
//! back.

use anacomp::codec::SparseCodec;
use anacomp::model::{DyadicGrid, SubshiftFamily};

fn main() -> anacomp::error::Result<()> {
    let grid = DyadicGrid::new(3)?;
    let codec = SparseCodec::new(4, 1, 4, 2, grid)?;
    let x = [0.0, 0.625, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let y = codec.encode(&x)?;
    let z = codec.decode(&y)?;
    println!("x = {x:?}");
    println!("y = {y:?}");
    println!("rate {} (ceiling {:.4}), exact: {}", codec.rate(), codec.rate_ceiling(), z == x);

    let family = SubshiftFamily::sparse(4, 1);
    let mut errors = 0;
    let windows = family.for_each_word(codec.n(), grid, 10_000_000, |w| {
        let x: Vec<f64> = w.iter().map(|&i| grid.value(i)).collect();
        if codec.encode(&x).and_then(|y| codec.decode(&y)).ok() != Some(x) {
            errors += 1;
        }
    })?;
    println!("{windows} admissible windows, {errors} roundtrip errors");
    Ok(())
}
