//! The compression-rate chain for the sparse family and the full shift.

use anacomp::harness::{bound_chain, BoundChainConfig};
use anacomp::model::{DyadicGrid, Norm, SubshiftFamily};

fn main() -> anacomp::error::Result<()> {
    let grid = DyadicGrid::new(4)?;
    let config = BoundChainConfig::default();
    for family in [SubshiftFamily::sparse(4, 1), SubshiftFamily::full_grid()] {
        let report = bound_chain(&family, 2, Norm::Inf, grid, &config)?;
        println!("{}: mmdim {:.4}, mbdim {:.4}, ceiling {:.4}", report.family, report.mmdim, report.mbdim, report.ceiling);
        for r in &report.rates {
            println!("  {:<10} n={:<3} k={:<3} rate {:.4} errors {}", r.scheme, r.n, r.k, r.rate, r.roundtrip_errors);
        }
        for row in &report.rows {
            println!("  [{}] {}: {:.4} vs {:.4}", if row.holds { "ok" } else { "FAIL" }, row.name, row.lhs, row.rhs);
        }
    }
    Ok(())
}
