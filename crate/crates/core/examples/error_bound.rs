//! Rate-distortion lower bound against the sparse codec's achieved rate.

use anacomp::codec::{CodecPair, SparseCodec};
use anacomp::harness::{ball_entropy_check, binary_shift_bound, thm_consistency};
use anacomp::model::{DyadicGrid, MeasureSpec, Norm};
use anacomp::ratedist::{rd_function, DEFAULT_TABLE_BUDGET};

fn main() -> anacomp::error::Result<()> {
    let grid = DyadicGrid::new(3)?;
    let measure = MeasureSpec::ShiftAverageProduct { n: 4, k: 1 };
    let eps = [0.0625, 0.125, 0.25, 0.5];
    let curve = rd_function(&measure, &[4], 2.0, &eps, grid, 10_000_000, DEFAULT_TABLE_BUDGET)?;
    let codec = CodecPair::sparse(SparseCodec::new(4, 1, 4, 2, grid)?, Norm::P(2.0));
    for row in thm_consistency(&codec, &measure, &curve, &eps, grid, 10_000_000)? {
        println!("eps {}: bound {:.4} <= rate {:.4}: {}", row.epsilon, row.bound, row.rate, row.row.holds);
    }
    println!("binary shift bound (alpha 1, L 1): {:.6}", binary_shift_bound(1.0, 1.0)?);
    let balls = ball_entropy_check(14, &[0.125, 0.25, 0.375, 0.5])?;
    println!("ball counts: {} cases, {} violations", balls.len(), balls.iter().filter(|r| !r.holds).count());
    Ok(())
}
