//! Rate-distortion curves of the sparse shift-average measure and the
//! uniform i.i.d. measure, printed as CSV.

use anacomp::model::{DyadicGrid, MeasureSpec};
use anacomp::ratedist::{rd_function, DEFAULT_TABLE_BUDGET};

fn main() -> anacomp::error::Result<()> {
    let grid = DyadicGrid::new(3)?;
    let eps = [0.0625, 0.125, 0.25, 0.5];
    let measures = [MeasureSpec::ShiftAverageProduct { n: 4, k: 1 }, MeasureSpec::uniform_grid_iid(grid)];
    println!("measure,p,epsilon,rate,rate_over_log");
    for m in &measures {
        for p in [1.0, 2.0] {
            let curve = rd_function(m, &[4], p, &eps, grid, 100_000_000, DEFAULT_TABLE_BUDGET)?;
            for pt in &curve.points {
                println!("{},{p},{},{:.5},{:.5}", m.label(), pt.epsilon, pt.rate, pt.rate / -pt.epsilon.log2());
            }
        }
    }
    Ok(())
}
