use anacomp::codec::{verify_regularity, CheckMode, CodecPair, SparseCodec};
use anacomp::dimension::projection_cell_counts;
use anacomp::harness::{
    ball_entropy_check, binary_shift_bound, bound_chain, difference_subspace, lin_rank_check, lin_rank_survey,
    rate_inf_rule, subadditive_limit, BoundChainConfig,
};
use anacomp::model::{DyadicGrid, Norm, SubshiftFamily};
use anacomp::spacefill::Domain;

const BUDGET: u64 = 10_000_000;

fn g(b: u32) -> DyadicGrid {
    DyadicGrid::new(b).unwrap()
}

#[test]
fn sparse_chain_holds() {
    let r = bound_chain(&SubshiftFamily::sparse(4, 1), 2, Norm::Inf, g(4), &BoundChainConfig::default()).unwrap();
    assert!(r.passed(), "{:#?}", r.rows.iter().filter(|x| !x.holds).collect::<Vec<_>>());
    assert!((r.alpha * r.mmdim - 0.125).abs() < 0.02);
    assert_eq!(r.rate("sparse"), Some(0.25));
    assert_eq!(r.ceiling, 1.0);
    assert!(r.rates.iter().all(|s| s.roundtrip_errors == 0));
}

#[test]
fn full_grid_uses_the_route() {
    let r = bound_chain(&SubshiftFamily::full_grid(), 2, Norm::Inf, g(4), &BoundChainConfig::default()).unwrap();
    assert!(r.passed());
    assert!(r.rate("sparse").is_none());
    let route = r.rate("route").unwrap();
    assert!((route - 0.5).abs() <= 0.1, "{route}");
}

#[test]
fn dense_sparse_family_collapses() {
    let config = BoundChainConfig { ells: vec![1, 2], ..BoundChainConfig::default() };
    let r = bound_chain(&SubshiftFamily::sparse(2, 2), 2, Norm::Inf, g(3), &config).unwrap();
    assert!(r.passed());
    let best = r.rate("sparse").unwrap();
    assert!(best >= r.alpha - 0.02 && best <= 1.0, "{best}");
}

#[test]
fn chain_output_is_reproducible() {
    let c = BoundChainConfig::default();
    let a = bound_chain(&SubshiftFamily::sparse(4, 1), 2, Norm::P(1.0), g(3), &c).unwrap();
    let b = bound_chain(&SubshiftFamily::sparse(4, 1), 2, Norm::P(1.0), g(3), &c).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn ball_examples() {
    let rows = ball_entropy_check(14, &[0.125, 0.25, 0.375, 0.5]).unwrap();
    assert!(rows.iter().all(|r| r.holds));
    let r = rows.iter().find(|r| r.n == 4 && r.delta == 0.25).unwrap();
    assert_eq!(r.closed_sum, 5);
    assert!((r.bound - 9.48).abs() < 0.01);
    let tiny = ball_entropy_check(10, &[1e-6]).unwrap();
    assert!(tiny.iter().all(|r| r.strict_count == 1 && r.closed_sum == 1 && r.holds));
    assert!(ball_entropy_check(4, &[0.75]).is_err());
    assert!(ball_entropy_check(17, &[0.25]).is_err());
}

#[test]
fn shift_bound_examples() {
    assert!((binary_shift_bound(1.0, 1.0).unwrap() - 0.062907).abs() < 1e-6);
    let vals: Vec<f64> = [1.0, 10.0, 100.0, 1000.0].iter().map(|&l| binary_shift_bound(1.0, l).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(binary_shift_bound(0.5, 3.0).unwrap() * 2.0, binary_shift_bound(1.0, 3.0).unwrap());
    assert!(binary_shift_bound(0.0, 1.0).is_err());
}

#[test]
fn rank_deficient_below_threshold() {
    let r = lin_rank_check(4, 1, 4, 7, 200, 0).unwrap();
    assert_eq!(r.subspace_dim, 8);
    assert_eq!(r.rank_deficient, 200);
}

#[test]
fn full_rank_at_threshold() {
    let r = lin_rank_survey(4, 1, 4, 8, 200, 0).unwrap();
    assert!(r.full_rank >= 190, "{r:?}");
    assert!(lin_rank_check(4, 1, 4, 8, 10, 0).is_err());
}

#[test]
fn threshold_uses_block_length_when_support_is_dense() {
    assert_eq!(difference_subspace(3, 2, 2).len(), 6);
    assert!(lin_rank_check(3, 2, 2, 6, 1, 0).is_err());
    assert_eq!(lin_rank_check(3, 2, 2, 5, 20, 0).unwrap().rank_deficient, 20);
}

#[test]
fn sparse_counts_are_subadditive() {
    let counts = projection_cell_counts(&SubshiftFamily::sparse(4, 1), 8, &[2], g(3), BUDGET);
    assert!(counts.is_ok());
    let logs: Vec<f64> = (1..=8)
        .map(|m| (projection_cell_counts(&SubshiftFamily::sparse(4, 1), m, &[2], g(3), BUDGET).unwrap()[0] as f64).log2())
        .collect();
    let lim = subadditive_limit(&logs).unwrap();
    assert!(lim.estimate > 0.0 && lim.estimate <= logs[0]);
}

#[test]
fn fekete_rejects_superadditive() {
    assert!(subadditive_limit(&[1.0, 3.0]).is_err());
    assert_eq!(subadditive_limit(&[2.0, 3.0, 4.0]).unwrap().argmin, 3);
}

#[test]
fn sparse_rates_inf_at_longest_window() {
    let rates: Vec<(usize, f64)> = [1usize, 2, 4]
        .iter()
        .map(|&l| {
            let c = SparseCodec::new(4, 1, l, 2, g(3)).unwrap();
            (4 * l, c.rate())
        })
        .collect();
    for &(n, r) in &rates {
        let l = n / 4;
        assert_eq!(r, ((l as f64 / 2.0).ceil() + 2.0) / n as f64);
    }
    let best = rate_inf_rule(&rates).unwrap();
    assert_eq!((best.best_n, best.best_rate), (16, 0.25));
    assert_eq!(rate_inf_rule(&[(3, 0.4)]).unwrap().best_rate, 0.4);
}

#[test]
fn concatenated_constant_inflation() {
    let grid = g(2);
    let fam = SubshiftFamily::sparse(4, 1);
    for p in [1.0, 2.0] {
        let inner = CodecPair::sparse(SparseCodec::new(4, 1, 1, 2, grid).unwrap(), Norm::P(p));
        let l0 = inner.decoder_spec().constant().unwrap();
        let alpha = inner.decoder_spec().exponent().unwrap();
        let cat = CodecPair::concat(inner, 6).unwrap();
        let image: Vec<Vec<f64>> = fam
            .enumerate_words(6, grid, BUDGET)
            .unwrap()
            .iter()
            .map(|w| cat.encode(w.values()).unwrap())
            .collect();
        let cert = verify_regularity(|y| cat.decode(y), cat.decoder_spec(), &Domain::Points(image), CheckMode::Exhaustive {
            max_pairs: BUDGET,
        })
        .unwrap();
        assert!(cert.certified, "p={p}");
        assert!(cert.max_ratio <= l0 * 2f64.powf(alpha / p) + 1e-9, "p={p}: {} vs {l0}", cert.max_ratio);
    }
}
