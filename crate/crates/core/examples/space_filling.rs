//! A Hölder surjection [0,1] -> [0,1]^2 built from the Hilbert curve, its
//! grid right inverse, and the measured Hölder constant.

use anacomp::model::Norm;
use anacomp::spacefill::{cube_surjection, holder_estimate, Domain};

fn main() -> anacomp::error::Result<()> {
    for b in [3, 4, 5] {
        let curve = cube_surjection(1, 2, b)?;
        let declared = curve.holder_constant(Norm::Inf);
        let domain = Domain::Grid { dim: 1, bits: curve.param_bits() };
        let est = holder_estimate(|t| curve.forward(t), &domain, Norm::Inf, declared, curve.exponent(), 50_000, 7)?;
        println!(
            "b={b}: right inverse {}, onto {}, exponent {}, L declared {declared:.3}, measured {:.3}, alpha_hat {:.3}",
            curve.verify_right_inverse(1 << 20)?,
            curve.verify_surjective(1 << 20)?,
            curve.exponent(),
            est.l_hat,
            est.alpha_hat
        );
    }
    let curve = cube_surjection(1, 2, 2)?;
    let steps = 1u64 << curve.param_bits();
    println!("t,y0,y1");
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let y = curve.forward(&[t])?;
        println!("{t},{},{}", y[0], y[1]);
    }
    Ok(())
}
