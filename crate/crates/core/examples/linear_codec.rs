//! Random linear encoders on the sparse family: the smallest injective
//! dimension, and the rank collapse below the difference-set threshold.

use anacomp::harness::{lin_rank_check, lin_rank_survey, smallest_certified_linear};
use anacomp::model::{DyadicGrid, SubshiftFamily};

fn main() -> anacomp::error::Result<()> {
    let grid = DyadicGrid::new(2)?;
    let family = SubshiftFamily::sparse(4, 1);
    for n in [4, 8] {
        match smallest_certified_linear(&family, n, 20, grid, 10_000_000, 0)? {
            Some(c) => println!("n={n}: injective at k={} (rate {:.3})", c.k, c.rate()),
            None => println!("n={n}: no injective k < n"),
        }
    }
    let below = lin_rank_check(4, 1, 4, 7, 200, 1)?;
    let at = lin_rank_survey(4, 1, 4, 8, 200, 1)?;
    println!("k=7: {}/{} rank deficient", below.rank_deficient, below.trials);
    println!("k=8: {}/{} full rank", at.full_rank, at.trials);
    Ok(())
}
