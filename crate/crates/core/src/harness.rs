//! End-to-end experiments tying dimensions, codecs and rate-distortion
//! bounds together, each reported as `(lhs, rhs, slack)` rows.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::codec::{binomial, measure_error, CodecPair, ErrorMode, LinearCodec, RouteCodec, SparseCodec};
use crate::dimension::{dimension_pair, mbdim_estimate, mmdim_estimate, DimensionEstimate};
use crate::error::{Error, Result};
use crate::model::{DyadicGrid, MeasureSpec, Norm, SubshiftFamily};
use crate::ratedist::{binary_entropy, thm_main_bound, RdCurve};
use crate::rng;

/// One checked inequality `lhs <= rhs + tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub holds: bool,
    pub note: String,
}

impl InequalityRow {
    pub fn new(name: &str, lhs: f64, rhs: f64, tolerance: f64, note: &str) -> Self {
        let slack = rhs - lhs;
        Self { name: name.into(), lhs, rhs, slack, tolerance, holds: slack >= -tolerance, note: note.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundChainConfig {
    /// Window multiples tried for the sparse codec.
    pub ells: Vec<usize>,
    /// Grid used for codec construction and exhaustive roundtrips.
    pub codec_bits: u32,
    /// Seeds tried per `k` for the linear codec.
    pub linear_seeds: u64,
    pub tolerance: f64,
    pub budget: u64,
    /// Largest window set roundtripped through the route codec; beyond it
    /// only the curve's right inverse is checked.
    pub roundtrip_budget: u64,
    pub seed: u64,
}

impl Default for BoundChainConfig {
    fn default() -> Self {
        Self { ells: vec![1, 2, 4], codec_bits: 3, linear_seeds: 20, tolerance: 0.02, budget: 100_000_000, roundtrip_budget: 1 << 20, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeRate {
    pub scheme: String,
    pub n: usize,
    pub k: usize,
    pub rate: f64,
    /// Roundtrip errors over the enumerated window set.
    pub roundtrip_errors: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundChainReport {
    pub family: String,
    pub alpha: f64,
    pub norm: Norm,
    pub mmdim: f64,
    pub mbdim: f64,
    pub ceiling: f64,
    pub rates: Vec<SchemeRate>,
    pub rows: Vec<InequalityRow>,
}

impl BoundChainReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    pub fn rate(&self, scheme: &str) -> Option<f64> {
        self.rates.iter().find(|r| r.scheme == scheme).map(|r| r.rate)
    }
}

fn roundtrip_errors(codec: &CodecPair, family: &SubshiftFamily, grid: DyadicGrid, budget: u64) -> Result<u64> {
    let mut errors = 0u64;
    let mut failure = None;
    family.for_each_word(codec.n(), grid, budget, |w| {
        let x: Vec<f64> = w.iter().map(|&v| grid.value(v)).collect();
        match codec.roundtrip(&x) {
            Ok(z) if z == x => {}
            Ok(_) => errors += 1,
            Err(e) => failure = Some(e),
        }
    })?;
    failure.map_or(Ok(errors), Err)
}

/// Smallest `k` at which some seed gives an injective linear encoder on
/// the enumerated windows of length `n`.
pub fn smallest_certified_linear(
    family: &SubshiftFamily,
    n: usize,
    seeds: u64,
    grid: DyadicGrid,
    budget: u64,
    seed: u64,
) -> Result<Option<LinearCodec>> {
    for k in 1..n {
        for s in 0..seeds {
            let codec = LinearCodec::new(family, n, k, rng::child_seed(seed, &format!("linear-{s}")), grid, budget)?;
            if codec.injective() {
                return Ok(Some(codec));
            }
        }
    }
    Ok(None)
}

/// The chain `α·mmdim ≤ rates ≤ min{1, 2·mbdim/(1-α)}` with the
/// construction-specific ceilings.
pub fn bound_chain(
    family: &SubshiftFamily,
    q: usize,
    norm: Norm,
    grid: DyadicGrid,
    config: &BoundChainConfig,
) -> Result<BoundChainReport> {
    if q == 0 {
        return Err(Error::param("alpha must be 1/q with q >= 1"));
    }
    let alpha = 1.0 / q as f64;
    let js: Vec<u32> = (2..=grid.bits()).collect();
    let (mm, mb) = if family.default_mmdim_schedule() == family.default_mbdim_schedule() {
        dimension_pair(family, &family.default_mmdim_schedule(), &js, grid, config.budget)?
    } else {
        (
            mmdim_estimate(family, &family.default_mmdim_schedule(), &js, grid, config.budget)?,
            mbdim_estimate(family, &family.default_mbdim_schedule(), &js, grid, config.budget)?,
        )
    };
    let ceiling = (2.0 * mb.value / (1.0 - alpha)).min(1.0);
    let ceiling = if alpha >= 1.0 { 1.0 } else { ceiling };
    let floor = alpha * mm.value;
    let tol = config.tolerance;
    let codec_grid = DyadicGrid::new(config.codec_bits)?;
    let mut rates = Vec::new();
    let mut rows = Vec::new();

    if let SubshiftFamily::SparseNK { n: big_n, k: big_k } = *family {
        let mut best: Option<(SparseCodec, u64)> = None;
        for &ell in &config.ells {
            let codec = SparseCodec::new(big_n, big_k, ell, q, codec_grid)?;
            let pair = CodecPair::sparse(codec.clone(), norm);
            let errors = roundtrip_errors(&pair, family, codec_grid, config.budget)?;
            rates.push(SchemeRate {
                scheme: format!("sparse-l{ell}"),
                n: codec.n(),
                k: codec.k(),
                rate: codec.rate(),
                roundtrip_errors: errors,
            });
            rows.push(InequalityRow::new(
                &format!("sparse rate (l={ell}) <= alpha*K/N + 3/(l*N)"),
                codec.rate(),
                codec.rate_ceiling(),
                0.0,
                "construction ceiling",
            ));
            if best.as_ref().is_none_or(|(b, _)| codec.rate() < b.rate()) {
                best = Some((codec, errors));
            }
        }
        if let Some((codec, errors)) = best {
            rates.push(SchemeRate {
                scheme: "sparse".into(),
                n: codec.n(),
                k: codec.k(),
                rate: codec.rate(),
                roundtrip_errors: errors,
            });
            rows.push(InequalityRow::new("alpha*mmdim <= sparse rate", floor, codec.rate(), tol, "lower bound"));
            rows.push(InequalityRow::new(
                "sparse rate <= min(1, 2*mbdim/(1-alpha))",
                codec.rate(),
                ceiling,
                tol,
                "linear embedding ceiling",
            ));
            rows.push(InequalityRow::new(
                "alpha*K/N <= sparse rate",
                alpha * big_k as f64 / big_n as f64,
                codec.rate(),
                0.0,
                "analytic input, not estimated",
            ));
            rows.push(InequalityRow::new("sparse roundtrip errors", errors as f64, 0.0, 0.0, "exhaustive"));
        }
        let n_lin = big_n;
        if let Some(lin) =
            smallest_certified_linear(family, n_lin, config.linear_seeds, codec_grid, config.budget, config.seed)?
        {
            let pair = CodecPair::linear(lin.clone());
            let errors = roundtrip_errors(&pair, family, codec_grid, config.budget)?;
            rates.push(SchemeRate { scheme: "linear".into(), n: lin.n, k: lin.k, rate: lin.rate(), roundtrip_errors: errors });
            rows.push(InequalityRow::new("alpha*mmdim <= linear rate", floor, lin.rate(), tol, "lower bound"));
            rows.push(InequalityRow::new(
                "linear rate <= min(1, 2*mbdim/(1-alpha))",
                lin.rate(),
                ceiling,
                tol,
                "finite-window certificate",
            ));
        }
    }

    // Quantizer + surjection route on the longest window tried.
    let n_route = match family {
        SubshiftFamily::SparseNK { n, .. } => n * config.ells.iter().copied().max().unwrap_or(1),
        _ => 4 * q,
    };
    let route = RouteCodec::new(n_route, q, codec_grid)?;
    let pair = CodecPair::route(route.clone(), norm);
    let route_errors = if family.word_count_estimate(n_route, codec_grid) <= config.roundtrip_budget.min(config.budget) as f64 {
        roundtrip_errors(&pair, family, codec_grid, config.budget)?
    } else {
        let side = (1u64 << route.curve.b) as f64 + 1.0;
        let ok = if side.powi(route.curve.n as i32) <= config.roundtrip_budget as f64 {
            route.curve.verify_right_inverse(config.roundtrip_budget)?
        } else {
            route.curve.verify_right_inverse_sampled(config.roundtrip_budget, config.seed)?
        };
        u64::from(!ok)
    };
    rates.push(SchemeRate {
        scheme: "route".into(),
        n: n_route,
        k: pair.k(),
        rate: pair.rate(),
        roundtrip_errors: route_errors,
    });
    rows.push(InequalityRow::new("alpha*mmdim <= route rate", floor, pair.rate(), tol, "lower bound"));
    rows.push(InequalityRow::new(
        "route rate <= alpha + 1/n",
        pair.rate(),
        alpha + 1.0 / n_route as f64,
        0.0,
        "universal ceiling",
    ));
    if matches!(family, SubshiftFamily::FullShift { .. }) {
        rows.push(InequalityRow::new("|route rate - alpha| <= 0.1", (pair.rate() - alpha).abs(), 0.1, 0.0, "full shift"));
    }
    rows.push(InequalityRow::new("route roundtrip errors", route_errors as f64, 0.0, 0.0, "grid inputs"));

    Ok(BoundChainReport { family: family.label(), alpha, norm, mmdim: mm.value, mbdim: mb.value, ceiling, rates, rows })
}

/// Lower bound from the rate-distortion function checked against a codec's
/// rate at each tabulated `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThmRow {
    pub codec: String,
    pub epsilon: f64,
    pub measured_error: f64,
    pub l: f64,
    pub alpha: f64,
    pub norm: Norm,
    pub bound: f64,
    pub rate: f64,
    pub row: InequalityRow,
}

/// For each `ε`: evaluate the codec error exactly (mean `L^p` for finite
/// `p`, mismatch probability for `∞`), and if it is at most `ε` check that
/// the lower bound does not exceed the achieved rate.
pub fn thm_consistency(
    codec: &CodecPair,
    measure: &MeasureSpec,
    curve: &RdCurve,
    epsilons: &[f64],
    grid: DyadicGrid,
    budget: u64,
) -> Result<Vec<ThmRow>> {
    let spec = codec.decoder_spec();
    let (Some(norm), Some(l), Some(alpha)) = (spec.norm(), spec.constant(), spec.exponent()) else {
        return Err(Error::param("codec decoder has no Hölder certificate"));
    };
    let mode = match norm {
        Norm::P(p) => ErrorMode::MeanLp { p },
        Norm::Inf => ErrorMode::MismatchProb,
    };
    let err = measure_error(codec, measure, grid, mode, 1, 0, budget)?;
    if !err.exact {
        return Err(Error::param("codec error could not be evaluated exactly"));
    }
    epsilons
        .iter()
        .filter(|&&e| err.value <= e)
        .map(|&e| {
            let bound = thm_main_bound(curve, e, l, alpha, norm)?;
            Ok(ThmRow {
                codec: codec.scheme_name(),
                epsilon: e,
                measured_error: err.value,
                l,
                alpha,
                norm,
                bound,
                rate: codec.rate(),
                row: InequalityRow::new("rd lower bound <= codec rate", bound, codec.rate(), 0.0, "exact error"),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallRow {
    pub n: usize,
    pub delta: f64,
    /// `#{y : ‖x - y‖_1 < δ}`, counted by brute force.
    pub strict_count: u64,
    /// `Σ_{i ≤ nδ} C(n, i)`, the count of supports the proof injects into.
    pub closed_sum: u64,
    pub bound: f64,
    pub holds: bool,
}

/// `#B(x, δ) ≤ Σ_{i≤nδ} C(n,i) ≤ 2^{nH(δ)}` on `{0,1}^n` in the normalized
/// `ℓ1` norm. The count is the same for every centre, so `x = 0` suffices.
pub fn ball_entropy_check(nmax: usize, deltas: &[f64]) -> Result<Vec<BallRow>> {
    if nmax > 16 {
        return Err(Error::param("ball check is limited to n <= 16"));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0 && d <= 0.5)) {
        return Err(Error::param(format!("delta must lie in (0, 1/2], got {d}")));
    }
    let mut rows = Vec::new();
    for n in 1..=nmax {
        for &delta in deltas {
            let strict = (0u32..1 << n).filter(|y| (y.count_ones() as f64) / (n as f64) < delta).count() as u64;
            let top = (n as f64 * delta + 1e-12).floor() as usize;
            let closed: u64 = (0..=top.min(n)).map(|i| binomial(n, i) as u64).sum();
            let bound = 2f64.powf(n as f64 * binary_entropy(delta));
            rows.push(BallRow {
                n,
                delta,
                strict_count: strict,
                closed_sum: closed,
                bound,
                holds: strict <= closed && closed as f64 <= bound * (1.0 + 1e-12),
            });
        }
    }
    Ok(rows)
}

/// `α(1 - H(1/4)) / log2 max{8L, 8}`: a positive lower bound on Hölder
/// compression rates of the full binary shift.
pub fn binary_shift_bound(alpha: f64, l: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) || !(l > 0.0) {
        return Err(Error::param("binary shift bound needs alpha in (0,1] and L > 0"));
    }
    Ok(alpha * (1.0 - binary_entropy(0.25)) / (8.0 * l).max(8.0).log2())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinRankReport {
    pub big_n: usize,
    pub big_k: usize,
    pub ell: usize,
    pub k: usize,
    /// Dimension of the coordinate subspace spanned by differences.
    pub subspace_dim: usize,
    pub trials: usize,
    pub rank_deficient: usize,
    pub full_rank: usize,
}

/// Coordinates of the first and last `K` entries of each length-`N` block;
/// every vector supported there is a difference of two sparse windows.
pub fn difference_subspace(big_n: usize, big_k: usize, ell: usize) -> Vec<usize> {
    (0..ell)
        .flat_map(|b| (0..big_n).filter(move |&i| i < big_k || i >= big_n - big_k).map(move |i| b * big_n + i))
        .collect()
}

/// Rank of random `k × ℓN` Gaussian matrices restricted to the difference
/// subspace, for any `k`.
pub fn lin_rank_survey(big_n: usize, big_k: usize, ell: usize, k: usize, trials: usize, seed: u64) -> Result<LinRankReport> {
    if big_k == 0 || big_k > big_n || ell == 0 || k == 0 {
        return Err(Error::param("rank survey needs 1 <= K <= N, l >= 1, k >= 1"));
    }
    let cols = difference_subspace(big_n, big_k, ell);
    let width = ell * big_n;
    let mut deficient = 0;
    for t in 0..trials {
        let trial_seed = rng::child_seed(seed, &format!("rank-{t}"));
        let mut data = Vec::with_capacity(k * cols.len());
        for r in 0..k {
            let mut g = rng::stream(trial_seed, r as u64);
            let row: Vec<f64> = (0..width).map(|_| StandardNormal.sample(&mut g)).collect();
            data.extend(cols.iter().map(|&c| row[c]));
        }
        let m = DMatrix::from_row_slice(k, cols.len(), &data);
        if m.rank(1e-9) < cols.len() {
            deficient += 1;
        }
    }
    Ok(LinRankReport {
        big_n,
        big_k,
        ell,
        k,
        subspace_dim: cols.len(),
        trials,
        rank_deficient: deficient,
        full_rank: trials - deficient,
    })
}

/// [`lin_rank_survey`] below the threshold `min{2ℓK, ℓN}`, where every
/// linear encoder must collapse some pair of admissible windows.
pub fn lin_rank_check(big_n: usize, big_k: usize, ell: usize, k: usize, trials: usize, seed: u64) -> Result<LinRankReport> {
    let threshold = (2 * ell * big_k).min(ell * big_n);
    if k >= threshold {
        return Err(Error::param(format!("k={k} is not below the threshold {threshold}")));
    }
    lin_rank_survey(big_n, big_k, ell, k, trials, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubadditiveLimit {
    /// `min_m a_m / m`.
    pub estimate: f64,
    pub argmin: usize,
    /// Whether `a_m / m` is nonincreasing along the table.
    pub monotone: bool,
}

/// Fekete limit of a subadditive table `a_1, …, a_n`.
pub fn subadditive_limit(values: &[f64]) -> Result<SubadditiveLimit> {
    if values.is_empty() {
        return Err(Error::param("empty sequence"));
    }
    let n = values.len();
    let mut pairs = Vec::new();
    for m in 1..=n {
        for k in m..=n - m {
            if m + k <= n && values[m + k - 1] > values[m - 1] + values[k - 1] + 1e-12 {
                pairs.push((m, k));
            }
        }
    }
    if !pairs.is_empty() {
        return Err(Error::Subadditivity { pairs });
    }
    let ratios: Vec<f64> = values.iter().enumerate().map(|(i, v)| v / (i + 1) as f64).collect();
    let (argmin, estimate) = ratios
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &r)| if r < acc.1 { (i, r) } else { acc });
    Ok(SubadditiveLimit {
        estimate,
        argmin: argmin + 1,
        monotone: ratios.windows(2).all(|w| w[1] <= w[0] + 1e-12),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateInfReport {
    pub best_n: usize,
    pub best_rate: f64,
    pub rates: Vec<(usize, f64)>,
}

/// `inf_n r(S, 0, n)` over the block lengths tried.
pub fn rate_inf_rule(rates: &[(usize, f64)]) -> Result<RateInfReport> {
    let &(best_n, best_rate) = rates
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .ok_or_else(|| Error::param("no rates supplied"))?;
    Ok(RateInfReport { best_n, best_rate, rates: rates.to_vec() })
}

/// Both mean dimensions with each family's default schedules.
pub fn family_dimensions(
    family: &SubshiftFamily,
    grid: DyadicGrid,
    budget: u64,
) -> Result<(DimensionEstimate, DimensionEstimate)> {
    let js: Vec<u32> = (2..=grid.bits()).collect();
    Ok((
        mmdim_estimate(family, &family.default_mmdim_schedule(), &js, grid, budget)?,
        mbdim_estimate(family, &family.default_mbdim_schedule(), &js, grid, budget)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_example() {
        let rows = ball_entropy_check(4, &[0.25]).unwrap();
        let r = rows.iter().find(|r| r.n == 4).unwrap();
        assert_eq!(r.closed_sum, 5);
        assert_eq!(r.strict_count, 1);
        assert!((r.bound - 9.48).abs() < 0.01);
        assert!(ball_entropy_check(4, &[0.6]).is_err());
    }

    #[test]
    fn shift_bound_value() {
        assert!((binary_shift_bound(1.0, 1.0).unwrap() - 0.062907).abs() < 1e-6);
        let half = binary_shift_bound(0.5, 1.0).unwrap();
        assert!((2.0 * half - binary_shift_bound(1.0, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn fekete_examples() {
        let lin: Vec<f64> = (1..=6).map(|m| 0.7 * m as f64).collect();
        assert!((subadditive_limit(&lin).unwrap().estimate - 0.7).abs() < 1e-12);
        let plus: Vec<f64> = (1..=10).map(|m| m as f64 + 1.0).collect();
        let r = subadditive_limit(&plus).unwrap();
        assert_eq!(r.argmin, 10);
        assert!(matches!(subadditive_limit(&[1.0, 3.0]), Err(Error::Subadditivity { .. })));
    }

    #[test]
    fn subspace_when_two_k_exceeds_n() {
        assert_eq!(difference_subspace(3, 2, 2).len(), 6);
        assert_eq!(difference_subspace(4, 1, 4).len(), 8);
        assert!(lin_rank_check(3, 2, 2, 6, 1, 0).is_err());
    }

    #[test]
    fn single_rate() {
        assert_eq!(rate_inf_rule(&[(4, 0.75)]).unwrap().best_rate, 0.75);
    }
}
