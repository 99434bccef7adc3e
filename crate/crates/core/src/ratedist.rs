//! Rate-distortion functions of finite-alphabet block sources.
//!
//! Distortion between blocks is `(1/n) Σ |x_k - y_k|^p`, and a distortion
//! level `ε` means an expected distortion of at most `ε^p`. Rates are in
//! bits per coordinate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dimension::{lsq_slope, mmdim_estimate, DimensionEstimate};
use crate::error::{Error, Result};
use crate::model::{DyadicGrid, MeasureSpec, Norm, SubshiftFamily};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Largest source × reproduction table the solver will build.
pub const DEFAULT_TABLE_BUDGET: u64 = 10_000_000;

const MASS_TOL: f64 = 1e-12;

fn check_pmf(p: &[f64]) -> Result<()> {
    let mut total = 0.0;
    for &v in p {
        if !(v >= 0.0) {
            return Err(Error::Pmf(format!("negative or NaN entry {v}")));
        }
        total += v;
    }
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::Pmf(format!("entries sum to {total}")));
    }
    Ok(())
}

/// Shannon entropy in bits; zero-mass entries contribute nothing.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
}

/// Binary entropy `-δ log2 δ - (1-δ) log2 (1-δ)`.
pub fn binary_entropy(d: f64) -> f64 {
    entropy(&[d, 1.0 - d])
}

/// Joint law of a source block and its reproduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    pub source: Vec<Vec<f64>>,
    pub reproduction: Vec<Vec<f64>>,
    /// `table[x][y]`.
    pub table: Vec<Vec<f64>>,
}

impl JointPmf {
    pub fn new(source: Vec<Vec<f64>>, reproduction: Vec<Vec<f64>>, table: Vec<Vec<f64>>) -> Result<Self> {
        if table.len() != source.len() || table.iter().any(|r| r.len() != reproduction.len()) {
            return Err(Error::Pmf("table shape does not match the alphabets".into()));
        }
        check_pmf(&table.concat())?;
        Ok(Self { source, reproduction, table })
    }

    /// A table over index alphabets, for callers that only need the numbers.
    pub fn from_table(table: Vec<Vec<f64>>) -> Result<Self> {
        let rows = table.len();
        let cols = table.first().map_or(0, Vec::len);
        Self::new((0..rows).map(|i| vec![i as f64]).collect(), (0..cols).map(|j| vec![j as f64]).collect(), table)
    }

    pub fn source_marginal(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn reproduction_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.reproduction.len()];
        for row in &self.table {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }
}

pub fn mutual_information(joint: &JointPmf) -> Result<f64> {
    check_pmf(&joint.table.concat())?;
    let px = joint.source_marginal();
    let py = joint.reproduction_marginal();
    let mut total = 0.0;
    for (i, row) in joint.table.iter().enumerate() {
        for (j, &pxy) in row.iter().enumerate() {
            if pxy > 0.0 {
                total += pxy * (pxy / (px[i] * py[j])).log2();
            }
        }
    }
    Ok(total.max(0.0))
}

/// `(1/n) Σ |x_k - y_k|^p` for every source/reproduction pair.
pub fn distortion_table(source: &[Vec<f64>], reproduction: &[Vec<f64>], p: f64) -> Result<Vec<Vec<f64>>> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("distortion exponent must be finite and >= 1, got {p}")));
    }
    let n = source.first().or(reproduction.first()).map_or(0, Vec::len);
    for w in source.iter().chain(reproduction) {
        if w.len() != n {
            return Err(Error::Dimension { expected: n, got: w.len() });
        }
    }
    Ok(source
        .par_iter()
        .map(|x| reproduction.iter().map(|y| power_distortion(x, y, p)).collect())
        .collect())
}

/// `(1/n) Σ |x_k - y_k|^p`.
pub fn power_distortion(x: &[f64], y: &[f64], p: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>() / x.len() as f64
}

/// Solver output for one distortion target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaResult {
    /// Bits per block.
    pub rate: f64,
    pub distortion: f64,
    pub iterations: usize,
    /// Lagrange multiplier of the last run.
    pub slope: f64,
}

fn logsumexp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|x| (x - m).exp()).sum::<f64>().ln()
}

struct Solver<'a> {
    p: &'a [f64],
    d: &'a [Vec<f64>],
    tol: f64,
    max_iter: usize,
}

struct Fixed {
    rate: f64,
    distortion: f64,
    iterations: usize,
    converged: bool,
    log_q: Vec<f64>,
}

impl Solver<'_> {
    /// Alternating minimization at multiplier `s`, warm-started from `log_q`,
    /// until the Lagrangian `R + s·D` moves by less than `tol`. A stalled run
    /// still reports the rate of its own test channel, an upper bound on `R`
    /// at the distortion it achieves.
    fn run(&self, s: f64, mut log_q: Vec<f64>) -> Fixed {
        let ny = log_q.len();
        let mut last = f64::INFINITY;
        for it in 1..=self.max_iter {
            let log_z: Vec<f64> =
                self.d.iter().map(|row| logsumexp((0..ny).map(|y| log_q[y] - s * row[y]))).collect();
            let (rate, distortion) = self.evaluate(s, &log_q, &log_z);
            let objective = rate + s * distortion / std::f64::consts::LN_2;
            let converged = (last - objective).abs() < self.tol;
            if converged || it == self.max_iter {
                return Fixed { rate, distortion, iterations: it, converged, log_q };
            }
            last = objective;
            let log_c: Vec<f64> = (0..ny)
                .map(|y| {
                    logsumexp(
                        self.p
                            .iter()
                            .zip(self.d)
                            .zip(&log_z)
                            .filter(|((&px, _), _)| px > 0.0)
                            .map(|((&px, row), &lz)| px.ln() - s * row[y] - lz),
                    )
                })
                .collect();
            for y in 0..ny {
                log_q[y] += log_c[y];
            }
            let norm = logsumexp(log_q.iter().copied());
            for v in log_q.iter_mut() {
                *v -= norm;
            }
        }
        unreachable!("max_iter is at least one")
    }

    fn evaluate(&self, s: f64, log_q: &[f64], log_z: &[f64]) -> (f64, f64) {
        let mut dist = 0.0;
        let mut nats = 0.0;
        for ((&px, row), &lz) in self.p.iter().zip(self.d).zip(log_z) {
            if px == 0.0 {
                continue;
            }
            let dx: f64 = row
                .iter()
                .zip(log_q)
                .filter(|(_, lq)| lq.is_finite())
                .map(|(&d, &lq)| (lq - s * d - lz).exp() * d)
                .sum();
            dist += px * dx;
            nats += px * (-s * dx - lz);
        }
        ((nats / std::f64::consts::LN_2).max(0.0), dist)
    }
}

/// `R(D)` of a finite source at expected distortion `target`, in bits per
/// block. The multiplier is bisected and the answer is taken on the side
/// with distortion at most `target`, so the rate never understates `R`.
pub fn blahut_arimoto(pmf: &[f64], dist: &[Vec<f64>], target: f64, tol: f64, max_iter: usize) -> Result<BaResult> {
    check_pmf(pmf)?;
    if dist.len() != pmf.len() || dist.is_empty() {
        return Err(Error::Dimension { expected: pmf.len(), got: dist.len() });
    }
    let ny = dist[0].len();
    if ny == 0 || dist.iter().any(|r| r.len() != ny) {
        return Err(Error::param("distortion table rows must be nonempty and equal length"));
    }
    if !(target >= 0.0) {
        return Err(Error::param(format!("distortion target must be nonnegative, got {target}")));
    }
    let expected: Vec<f64> = (0..ny).map(|y| pmf.iter().zip(dist).map(|(p, r)| p * r[y]).sum()).collect();
    let d_max = expected.iter().copied().fold(f64::INFINITY, f64::min);
    if target >= d_max {
        return Ok(BaResult { rate: 0.0, distortion: d_max, iterations: 0, slope: 0.0 });
    }
    if target <= 0.0 {
        // Send each symbol to its first zero-distortion reproduction.
        let mut push = vec![0.0; ny];
        for (p, row) in pmf.iter().zip(dist) {
            if *p == 0.0 {
                continue;
            }
            let y = row.iter().position(|&v| v == 0.0).ok_or_else(|| {
                Error::param("zero distortion is unreachable with this reproduction alphabet")
            })?;
            push[y] += p;
        }
        return Ok(BaResult { rate: entropy(&push), distortion: 0.0, iterations: 0, slope: f64::INFINITY });
    }
    if max_iter == 0 {
        return Err(Error::param("max_iter must be positive"));
    }
    let solver = Solver { p: pmf, d: dist, tol, max_iter };
    let mut hi_s = 1.0;
    let mut hi = solver.run(hi_s, vec![-(ny as f64).ln(); ny]);
    let mut iterations = hi.iterations;
    while hi.distortion > target {
        hi_s *= 2.0;
        if hi_s > 1e9 {
            return Err(Error::NonConvergence { iterations, rate: hi.rate, distortion: hi.distortion });
        }
        hi = solver.run(hi_s, hi.log_q.clone());
        iterations += hi.iterations;
    }
    let mut lo_s = 0.0;
    for _ in 0..100 {
        if (target - hi.distortion).abs() <= tol * target.max(1.0) || hi_s - lo_s <= 1e-12 * hi_s {
            break;
        }
        let mid = 0.5 * (lo_s + hi_s);
        let r = solver.run(mid, hi.log_q.clone());
        iterations += r.iterations;
        if r.distortion <= target {
            hi_s = mid;
            hi = r;
        } else {
            lo_s = mid;
        }
    }
    if !hi.converged {
        return Err(Error::NonConvergence { iterations, rate: hi.rate, distortion: hi.distortion });
    }
    Ok(BaResult { rate: hi.rate, distortion: hi.distortion, iterations, slope: hi_s })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub n: usize,
    pub epsilon: f64,
    /// Bits per coordinate.
    pub rate: f64,
    /// Achieved expected distortion (compare with `epsilon^p`).
    pub achieved_distortion: f64,
    pub iterations: usize,
    pub slope: f64,
    /// False when the solver stalled; the rate is then an upper bound.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdCurve {
    pub p: f64,
    pub n_schedule: Vec<usize>,
    /// One point per `ε`, the smallest rate over the `n` schedule, sorted by `ε`.
    pub points: Vec<RdPoint>,
    /// Every `(n, ε)` run.
    pub table: Vec<RdPoint>,
    pub inf_over_n: bool,
}

impl RdCurve {
    /// A curve from given `(ε, rate)` pairs.
    pub fn from_points(p: f64, pairs: &[(f64, f64)]) -> Self {
        let mut points: Vec<RdPoint> = pairs
            .iter()
            .map(|&(epsilon, rate)| RdPoint {
                n: 1,
                epsilon,
                rate,
                achieved_distortion: f64::NAN,
                iterations: 0,
                slope: f64::NAN,
                converged: true,
            })
            .collect();
        points.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
        Self { p, n_schedule: vec![1], table: points.clone(), points, inf_over_n: false }
    }

    pub fn rate_at(&self, epsilon: f64) -> Option<f64> {
        self.points.iter().find(|pt| pt.epsilon == epsilon).map(|pt| pt.rate)
    }
}

/// `R_{μ,p}(n, ε)/n` for every pair in the schedules, with the curve taking
/// the infimum over `n`.
pub fn rd_function(
    measure: &MeasureSpec,
    ns: &[usize],
    p: f64,
    epsilons: &[f64],
    grid: DyadicGrid,
    budget: u64,
    table_budget: u64,
) -> Result<RdCurve> {
    if ns.is_empty() || epsilons.is_empty() {
        return Err(Error::param("rate-distortion schedules must be nonempty"));
    }
    let mut table = Vec::new();
    // Product measures under a per-letter distortion single-letterize, so
    // the block-n rate per coordinate is the n = 1 rate.
    let single = matches!(measure, MeasureSpec::ProductIid { .. });
    for &n in ns {
        let solve_n = if single { 1 } else { n };
        let m = measure.marginal(solve_n, grid, budget)?;
        let size = (m.len() as u64).saturating_mul(m.len() as u64);
        if size > table_budget {
            return Err(Error::Budget {
                what: format!("distortion table for n={n}"),
                estimate: size as f64,
                budget: table_budget,
            });
        }
        let words: Vec<Vec<f64>> = (0..m.len()).map(|i| m.values(i)).collect();
        let d = distortion_table(&words, &words, p)?;
        let runs: Vec<RdPoint> = epsilons
            .par_iter()
            .map(|&eps| {
                let target = eps.powf(p);
                let (r, converged) = match blahut_arimoto(&m.probs, &d, target, DEFAULT_TOL, DEFAULT_MAX_ITER) {
                    Ok(r) => (r, true),
                    Err(Error::NonConvergence { iterations, rate, distortion }) if distortion <= target => {
                        (BaResult { rate, distortion, iterations, slope: f64::NAN }, false)
                    }
                    Err(e) => return Err(e),
                };
                Ok(RdPoint {
                    n,
                    epsilon: eps,
                    rate: r.rate / solve_n as f64,
                    achieved_distortion: r.distortion,
                    iterations: r.iterations,
                    slope: r.slope,
                    converged,
                })
            })
            .collect::<Result<_>>()?;
        table.extend(runs);
    }
    let mut eps_sorted = epsilons.to_vec();
    eps_sorted.sort_by(f64::total_cmp);
    eps_sorted.dedup();
    let points = eps_sorted
        .iter()
        .map(|&e| {
            table
                .iter()
                .filter(|pt| pt.epsilon == e)
                .min_by(|a, b| a.rate.total_cmp(&b.rate))
                .cloned()
                .expect("every epsilon was solved")
        })
        .collect();
    Ok(RdCurve { p, n_schedule: ns.to_vec(), points, table, inf_over_n: ns.len() > 1 })
}

/// Lower bound on the compression rate of any codec whose decoder is
/// `(L, α)`-Hölder in `norm` and whose error is at most `ε`:
/// `R(arg) / log2⌈1/ε⌉` with `arg = ((L^p/2^{pα}) + ε^{p(1-α)})^{1/p} ε^α`.
/// For the ∞-norm the `p = 1` curve is used. `R(arg)` is read at the
/// smallest tabulated `ε_i >= arg`, which can only lower the bound.
pub fn thm_main_bound(curve: &RdCurve, epsilon: f64, l: f64, alpha: f64, norm: Norm) -> Result<f64> {
    let p = match norm {
        Norm::P(p) => p,
        Norm::Inf => 1.0,
    };
    if (curve.p - p).abs() > 1e-12 {
        return Err(Error::param(format!("bound in this norm needs a p={p} curve, got p={}", curve.p)));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let arg = ((l.powf(p) / 2f64.powf(p * alpha)) + epsilon.powf(p * (1.0 - alpha))).powf(1.0 / p) * epsilon.powf(alpha);
    let (lo, hi) = match (curve.points.first(), curve.points.last()) {
        (Some(a), Some(b)) => (a.epsilon, b.epsilon),
        _ => return Err(Error::param("empty rate-distortion curve")),
    };
    let rate = match curve.points.iter().find(|pt| pt.epsilon >= arg) {
        Some(pt) => pt.rate,
        None if curve.points.last().is_some_and(|pt| pt.rate == 0.0) => 0.0,
        None => return Err(Error::OutOfRange { arg, lo, hi }),
    };
    Ok(rate / (1.0 / epsilon).ceil().log2())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdDimension {
    /// Slope of `R` against `log2(1/ε)` over the two smallest `ε`.
    pub value: f64,
    pub lsq_slope: f64,
}

pub fn rd_dimension(curve: &RdCurve) -> Result<RdDimension> {
    if curve.points.len() < 2 {
        return Err(Error::param("rate-distortion dimension needs at least two points"));
    }
    let xs: Vec<f64> = curve.points.iter().map(|pt| -pt.epsilon.log2()).collect();
    let ys: Vec<f64> = curve.points.iter().map(|pt| pt.rate).collect();
    let slope = (ys[0] - ys[1]) / (xs[0] - xs[1]);
    Ok(RdDimension { value: slope.max(0.0), lsq_slope: lsq_slope(&xs, &ys) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalRow {
    pub epsilon: f64,
    /// `sup_μ R_μ(ε) / log2(1/ε)` over the battery.
    pub value: f64,
    pub best_measure: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    pub rows: Vec<VariationalRow>,
    pub mmdim: DimensionEstimate,
    pub curves: Vec<(String, RdCurve)>,
}

#[allow(clippy::too_many_arguments)]
pub fn variational_estimate(
    measures: &[MeasureSpec],
    family: &SubshiftFamily,
    epsilons: &[f64],
    p: f64,
    ns: &[usize],
    grid: DyadicGrid,
    budget: u64,
    support_samples: usize,
    seed: u64,
) -> Result<VariationalReport> {
    if measures.is_empty() {
        return Err(Error::param("measure battery is empty"));
    }
    let check_len = ns.iter().copied().max().unwrap_or(1).max(family.default_mmdim_schedule()[0]);
    for m in measures {
        for b in m.sample_windows(check_len, support_samples.max(1), seed, grid)? {
            if !family.contains(&b) {
                return Err(Error::Unsupported { sample: b.into_values() });
            }
        }
    }
    let curves: Vec<(String, RdCurve)> = measures
        .iter()
        .map(|m| Ok((m.label(), rd_function(m, ns, p, epsilons, grid, budget, DEFAULT_TABLE_BUDGET)?)))
        .collect::<Result<_>>()?;
    let mut eps = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let rows = eps
        .iter()
        .map(|&e| {
            let (label, rate) = curves
                .iter()
                .map(|(l, c)| (l.clone(), c.rate_at(e).unwrap_or(0.0)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("battery is nonempty");
            VariationalRow { epsilon: e, value: rate / (1.0 / e).log2(), best_measure: label }
        })
        .collect();
    let js: Vec<u32> = (2..=grid.bits()).collect();
    let js = if js.len() >= 2 { js } else { vec![1, grid.bits().max(2)] };
    let mmdim = mmdim_estimate(family, &family.default_mmdim_schedule(), &js, grid, budget)?;
    Ok(VariationalReport { rows, mmdim, curves })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> (Vec<f64>, Vec<Vec<f64>>) {
        let w = vec![vec![0.0], vec![1.0]];
        (vec![0.5, 0.5], distortion_table(&w, &w, 1.0).unwrap())
    }

    #[test]
    fn mutual_information_examples() {
        let ind = JointPmf::from_table(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!(mutual_information(&ind).unwrap().abs() < 1e-12);
        let diag = JointPmf::from_table((0..4).map(|i| (0..4).map(|j| if i == j { 0.25 } else { 0.0 }).collect()).collect())
            .unwrap();
        assert!((mutual_information(&diag).unwrap() - 2.0).abs() < 1e-12);
        let t = JointPmf::from_table(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        assert!((mutual_information(&t).unwrap() - 0.278072).abs() < 1e-6);
    }

    #[test]
    fn distortion_examples() {
        let d = distortion_table(&[vec![0.0]], &[vec![1.0]], 1.0).unwrap();
        assert_eq!(d[0][0], 1.0);
        let d = distortion_table(&[vec![0.0, 0.0]], &[vec![1.0, 0.0], vec![0.0, 0.0]], 2.0).unwrap();
        assert_eq!(d[0], vec![0.5, 0.0]);
    }

    #[test]
    fn binary_endpoints() {
        let (p, d) = binary();
        assert_eq!(blahut_arimoto(&p, &d, 0.5, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().rate, 0.0);
        assert_eq!(blahut_arimoto(&p, &d, 0.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().rate, 1.0);
    }

    #[test]
    fn main_bound_arithmetic() {
        let c = RdCurve::from_points(1.0, &[(0.25, 1.0), (0.375, 0.5), (0.5, 0.0)]);
        let b = thm_main_bound(&c, 0.25, 1.0, 1.0, Norm::P(1.0)).unwrap();
        assert!((b - 0.25).abs() < 1e-12);
        let zero = RdCurve::from_points(1.0, &[(0.25, 0.0), (0.5, 0.0)]);
        assert_eq!(thm_main_bound(&zero, 0.25, 1.0, 1.0, Norm::P(1.0)).unwrap(), 0.0);
    }
}
