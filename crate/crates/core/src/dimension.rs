//! Covering numbers and dimension estimates.
//!
//! Covers are counted with half-open dyadic cells of side `2^-j` in the
//! ∞-norm (the last cell of each axis is closed). This differs from a count
//! of open sets of diameter `< 2^-j` by at most one dyadic scale and gives
//! the same dimension limits.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cell_of_index, Block, DyadicGrid, Norm, SubshiftFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoveringMethod {
    ExactCells,
    GreedyUpper,
    PackingLower,
}

impl CoveringMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CoveringMethod::ExactCells => "exact-cells",
            CoveringMethod::GreedyUpper => "greedy-upper",
            CoveringMethod::PackingLower => "packing-lower",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringCount {
    /// `ε = 2^-j`.
    pub j: u32,
    pub count: u64,
    pub method: CoveringMethod,
}

impl CoveringCount {
    pub fn epsilon(&self) -> f64 {
        2f64.powi(-(self.j as i32))
    }
}

/// The three counts computed on one point cloud.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub exact_cells: CoveringCount,
    /// Centres of a maximal `ε/2`-separated set; the `ε/2` balls around them
    /// cover the cloud with sets of diameter `< ε`.
    pub greedy_upper: CoveringCount,
    /// A maximal set with pairwise distances `> ε`; every set of diameter
    /// at most `ε` holds at most one of its points.
    pub packing_lower: CoveringCount,
}

/// One entry of the `(n, j)` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub family: String,
    pub n: usize,
    pub j: u32,
    pub count_method: CoveringMethod,
    pub count: u64,
    /// `log2(count) / (n·j)`.
    pub h_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub j_schedule: Vec<u32>,
    pub n_schedule: Vec<usize>,
    /// Per-scale values `min_n h(n, ε)`.
    pub per_epsilon: Vec<(u32, f64)>,
    pub table: Vec<TableRow>,
    /// Unclamped two-point slope at the finest pair of scales.
    pub endpoint_slope: f64,
    pub lsq_slope: f64,
    pub lower: f64,
    pub upper: f64,
}

fn check_resolution(j: u32, grid: DyadicGrid) -> Result<()> {
    if j > grid.bits() || j == 0 {
        return Err(Error::Resolution { j, bits: grid.bits() });
    }
    Ok(())
}

enum CellSet {
    Packed(HashSet<u128>),
    Boxes(HashSet<Box<[u32]>>),
}

impl CellSet {
    fn new(n: usize, j: u32) -> Self {
        if n as u32 * j <= 128 {
            CellSet::Packed(HashSet::new())
        } else {
            CellSet::Boxes(HashSet::new())
        }
    }

    fn insert(&mut self, word: &[u32], bits: u32, j: u32) {
        match self {
            CellSet::Packed(s) => {
                let key = word.iter().fold(0u128, |acc, &v| (acc << j) | cell_of_index(v, bits, j) as u128);
                s.insert(key);
            }
            CellSet::Boxes(s) => {
                s.insert(word.iter().map(|&v| cell_of_index(v, bits, j)).collect());
            }
        }
    }

    fn len(&self) -> u64 {
        match self {
            CellSet::Packed(s) => s.len() as u64,
            CellSet::Boxes(s) => s.len() as u64,
        }
    }
}

/// Occupied-cell counts of `π_n(S)` for every `j` in one enumeration pass.
pub fn projection_cell_counts(
    family: &SubshiftFamily,
    n: usize,
    js: &[u32],
    grid: DyadicGrid,
    budget: u64,
) -> Result<Vec<u64>> {
    for &j in js {
        check_resolution(j, grid)?;
    }
    let mut sets: Vec<CellSet> = js.iter().map(|&j| CellSet::new(n, j)).collect();
    family.for_each_word(n, grid, budget, |w| {
        for (set, &j) in sets.iter_mut().zip(js) {
            set.insert(w, grid.bits(), j);
        }
    })?;
    Ok(sets.iter().map(CellSet::len).collect())
}

fn cloud_indices(points: &[Block]) -> Result<(usize, DyadicGrid, Vec<Vec<u32>>)> {
    let first = points.first().ok_or_else(|| Error::param("empty point set"))?;
    let (n, grid) = (first.len(), first.grid());
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != n {
            return Err(Error::Dimension { expected: n, got: p.len() });
        }
        if p.grid() != grid {
            return Err(Error::param("points lie on different grids"));
        }
        out.push(p.indices());
    }
    Ok((n, grid, out))
}

/// Exact cell count of a cloud at scale `2^-j`.
pub fn cloud_cell_count(points: &[Block], j: u32) -> Result<u64> {
    let (n, grid, idx) = cloud_indices(points)?;
    check_resolution(j, grid)?;
    let mut set = CellSet::new(n, j);
    for w in &idx {
        set.insert(w, grid.bits(), j);
    }
    Ok(set.len())
}

fn greedy_by(points: &[Vec<f64>], far: impl Fn(&[f64], &[f64]) -> bool) -> Vec<&[f64]> {
    let mut chosen: Vec<&[f64]> = Vec::new();
    for p in points {
        if chosen.iter().all(|c| far(c, p)) {
            chosen.push(p);
        }
    }
    chosen
}

/// Greedy maximal subset whose points are pairwise at distance `>= sep`.
pub fn greedy_separated(points: &[Vec<f64>], sep: f64, dist: impl Fn(&[f64], &[f64]) -> f64) -> Vec<&[f64]> {
    greedy_by(points, |a, b| dist(a, b) >= sep)
}

pub fn covering_number(points: &[Block], j: u32, norm: Norm) -> Result<CoveringReport> {
    let exact = cloud_cell_count(points, j)?;
    let eps = 2f64.powi(-(j as i32));
    let vals: Vec<Vec<f64>> = points.iter().map(|b| b.values().to_vec()).collect();
    let d = |a: &[f64], b: &[f64]| norm.dist(a, b);
    let greedy = greedy_separated(&vals, eps / 2.0, d).len() as u64;
    // Strict: the closed last cell has diameter exactly ε.
    let packing = greedy_by(&vals, |a, b| d(a, b) > eps).len() as u64;
    Ok(CoveringReport {
        exact_cells: CoveringCount { j, count: exact, method: CoveringMethod::ExactCells },
        greedy_upper: CoveringCount { j, count: greedy, method: CoveringMethod::GreedyUpper },
        packing_lower: CoveringCount { j, count: packing, method: CoveringMethod::PackingLower },
    })
}

pub(crate) fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn check_schedule(js: &[u32], min: usize) -> Result<Vec<u32>> {
    let mut js = js.to_vec();
    js.sort_unstable();
    js.dedup();
    if js.len() < min {
        return Err(Error::param(format!("need at least {min} distinct scales, got {}", js.len())));
    }
    Ok(js)
}

/// Default scales `j = 2..=b`.
pub fn default_j_schedule(grid: DyadicGrid) -> Vec<u32> {
    (2..=grid.bits()).collect()
}

/// Box-counting slope of a point cloud in the ∞-norm.
pub fn box_dimension_estimate(points: &[Block], js: &[u32]) -> Result<DimensionEstimate> {
    let js = check_schedule(js, 3)?;
    let (n, _, _) = cloud_indices(points)?;
    let counts: Vec<u64> = js.iter().map(|&j| cloud_cell_count(points, j)).collect::<Result<_>>()?;
    let logs: Vec<f64> = counts.iter().map(|&c| (c as f64).log2()).collect();
    let xs: Vec<f64> = js.iter().map(|&j| j as f64).collect();
    let k = js.len();
    let endpoint = (logs[k - 1] - logs[k - 2]) / (xs[k - 1] - xs[k - 2]);
    let lsq = lsq_slope(&xs, &logs);
    let table = js
        .iter()
        .zip(&counts)
        .map(|(&j, &count)| TableRow {
            family: "cloud".into(),
            n,
            j,
            count_method: CoveringMethod::ExactCells,
            count,
            h_value: (count as f64).log2() / (n as f64 * j as f64),
        })
        .collect();
    Ok(DimensionEstimate {
        value: endpoint.max(0.0),
        per_epsilon: js.iter().zip(&logs).map(|(&j, &l)| (j, l / j as f64)).collect(),
        j_schedule: js,
        n_schedule: vec![n],
        table,
        endpoint_slope: endpoint,
        lsq_slope: lsq,
        lower: endpoint.min(lsq).max(0.0),
        upper: endpoint.max(lsq).max(0.0),
    })
}

fn family_table(
    family: &SubshiftFamily,
    ns: &[usize],
    js: &[u32],
    grid: DyadicGrid,
    budget: u64,
) -> Result<Vec<Vec<u64>>> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::param("n schedule must be nonempty and positive"));
    }
    ns.par_iter().map(|&n| projection_cell_counts(family, n, js, grid, budget)).collect()
}

fn rows(family: &SubshiftFamily, ns: &[usize], js: &[u32], counts: &[Vec<u64>]) -> Vec<TableRow> {
    let label = family.label();
    ns.iter()
        .zip(counts)
        .flat_map(|(&n, row)| {
            let label = label.clone();
            js.iter().zip(row).map(move |(&j, &count)| TableRow {
                family: label.clone(),
                n,
                j,
                count_method: CoveringMethod::ExactCells,
                count,
                h_value: (count as f64).log2() / (n as f64 * j as f64),
            })
        })
        .collect()
}

/// `lim_ε lim_n log#(π_n S, ε) / (n log(1/ε))`, with the `n`-limit taken
/// as the infimum over `ns` and the `ε`-limit as the slope of
/// `a(j) = min_n log2 # / n` at the finest pair of scales.
pub fn mmdim_estimate(
    family: &SubshiftFamily,
    ns: &[usize],
    js: &[u32],
    grid: DyadicGrid,
    budget: u64,
) -> Result<DimensionEstimate> {
    let js = check_schedule(js, 2)?;
    let counts = family_table(family, ns, &js, grid, budget)?;
    Ok(mm_from_table(family, ns, js, &counts))
}

/// Both estimates from one enumeration when they share a schedule.
pub fn dimension_pair(
    family: &SubshiftFamily,
    ns: &[usize],
    js: &[u32],
    grid: DyadicGrid,
    budget: u64,
) -> Result<(DimensionEstimate, DimensionEstimate)> {
    let js = check_schedule(js, 2)?;
    let counts = family_table(family, ns, &js, grid, budget)?;
    Ok((mm_from_table(family, ns, js.clone(), &counts), mb_from_table(family, ns, js, &counts)))
}

fn mm_from_table(family: &SubshiftFamily, ns: &[usize], js: Vec<u32>, counts: &[Vec<u64>]) -> DimensionEstimate {
    let a: Vec<f64> = (0..js.len())
        .map(|c| {
            ns.iter()
                .zip(counts)
                .map(|(&n, row)| (row[c] as f64).log2() / n as f64)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let xs: Vec<f64> = js.iter().map(|&j| j as f64).collect();
    let k = js.len();
    let endpoint = (a[k - 1] - a[k - 2]) / (xs[k - 1] - xs[k - 2]);
    let lsq = lsq_slope(&xs, &a);
    DimensionEstimate {
        value: endpoint.clamp(0.0, 1.0),
        per_epsilon: js.iter().zip(&a).map(|(&j, &v)| (j, v / j as f64)).collect(),
        table: rows(family, ns, &js, counts),
        j_schedule: js,
        n_schedule: ns.to_vec(),
        endpoint_slope: endpoint,
        lsq_slope: lsq,
        lower: endpoint.min(lsq).clamp(0.0, 1.0),
        upper: endpoint.max(lsq).clamp(0.0, 1.0),
    }
}

/// `lim_n dim_B(π_n S) / n`: the box slope of each projection, divided by
/// `n`, minimized over `ns`.
pub fn mbdim_estimate(
    family: &SubshiftFamily,
    ns: &[usize],
    js: &[u32],
    grid: DyadicGrid,
    budget: u64,
) -> Result<DimensionEstimate> {
    let js = check_schedule(js, 2)?;
    let counts = family_table(family, ns, &js, grid, budget)?;
    Ok(mb_from_table(family, ns, js, &counts))
}

fn mb_from_table(family: &SubshiftFamily, ns: &[usize], js: Vec<u32>, counts: &[Vec<u64>]) -> DimensionEstimate {
    let xs: Vec<f64> = js.iter().map(|&j| j as f64).collect();
    let k = js.len();
    let mut best = (f64::INFINITY, f64::INFINITY);
    for (&n, row) in ns.iter().zip(counts) {
        let logs: Vec<f64> = row.iter().map(|&c| (c as f64).log2() / n as f64).collect();
        let endpoint = (logs[k - 1] - logs[k - 2]) / (xs[k - 1] - xs[k - 2]);
        if endpoint < best.0 {
            best = (endpoint, lsq_slope(&xs, &logs));
        }
    }
    let (endpoint, lsq) = best;
    let per_epsilon = (0..k)
        .map(|c| {
            let v = ns
                .iter()
                .zip(counts)
                .map(|(&n, row)| (row[c] as f64).log2() / (n as f64 * js[c] as f64))
                .fold(f64::INFINITY, f64::min);
            (js[c], v)
        })
        .collect();
    DimensionEstimate {
        value: endpoint.clamp(0.0, 1.0),
        per_epsilon,
        table: rows(family, ns, &js, counts),
        j_schedule: js,
        n_schedule: ns.to_vec(),
        endpoint_slope: endpoint,
        lsq_slope: lsq,
        lower: endpoint.min(lsq).clamp(0.0, 1.0),
        upper: endpoint.max(lsq).clamp(0.0, 1.0),
    }
}

/// Comparison of projection counts with dynamical counts in the metric
/// `τ_n(x, y) = max_{0≤k<n} Σ_i 2^{-|i|} |x_{i+k} - y_{i+k}|`, computed on
/// zero-extended admissible words of the window `[-m, n+m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicalReport {
    pub n: usize,
    pub m: usize,
    pub j: u32,
    pub epsilon: f64,
    pub trajectories: usize,
    pub projection_cells: u64,
    /// Maximal `ε`-separated subset of `π_n(S)` in the ∞-norm.
    pub projection_count: usize,
    /// Maximal `ε`-separated set in `τ_n` containing lifts of the above.
    pub dynamical_count: usize,
    /// Maximal `8ε`-separated set in `τ_n`.
    pub dynamical_count_8eps: usize,
    /// Maximal `ε`-separated subset of the extended window in the ∞-norm.
    pub extended_count: usize,
    /// Every trajectory lies within `τ_n < 4ε` of an extended-window representative.
    pub net_ok: bool,
    /// `2^{-m+2} < ε`, under which truncation to the window is negligible.
    pub truncation_negligible: bool,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl DynamicalReport {
    pub fn passed(&self) -> bool {
        self.lower_ok && self.upper_ok && self.net_ok
    }
}

fn tau_n(x: &[f64], y: &[f64], n: usize, m: usize) -> f64 {
    (0..n)
        .map(|k| {
            let centre = k + m;
            x.iter()
                .zip(y)
                .enumerate()
                .map(|(i, (a, b))| (a - b).abs() * 2f64.powi(-((i as i64 - centre as i64).unsigned_abs() as i32)))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

pub fn dynamical_covering_check(
    family: &SubshiftFamily,
    n: usize,
    m: usize,
    j: u32,
    grid: DyadicGrid,
    budget: u64,
) -> Result<DynamicalReport> {
    check_resolution(j, grid)?;
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    let eps = 2f64.powi(-(j as i32));
    let words: Vec<Vec<f64>> = family
        .enumerate_words(n + 2 * m, grid, budget)?
        .into_iter()
        .map(Block::into_values)
        .collect();
    let inf = |a: &[f64], b: &[f64]| Norm::Inf.dist(a, b);
    let tau = |a: &[f64], b: &[f64]| tau_n(a, b, n, m);

    let mut seen = HashSet::new();
    let mut proj_words = Vec::new();
    let mut lifts = Vec::new();
    for w in &words {
        let key: Vec<u64> = w[m..m + n].iter().map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            proj_words.push(w[m..m + n].to_vec());
            lifts.push(w.clone());
        }
    }
    let proj_sep = greedy_separated(&proj_words, eps, inf);
    let proj_blocks: Vec<Block> = proj_words.iter().map(|w| Block::new(w.clone(), grid)).collect::<Result<_>>()?;
    let projection_cells = cloud_cell_count(&proj_blocks, j)?;

    // Seed the τ-separated set with lifts of the projection set; τ_n dominates
    // the ∞-distance on the central coordinates, so they stay separated.
    let chosen: HashSet<*const f64> = proj_sep.iter().map(|s| s.as_ptr()).collect();
    let mut dyn_set: Vec<&[f64]> = proj_words
        .iter()
        .zip(&lifts)
        .filter(|(p, _)| chosen.contains(&p.as_ptr()))
        .map(|(_, l)| l.as_slice())
        .collect();
    for w in &words {
        if dyn_set.iter().all(|c| tau(c, w) >= eps) {
            dyn_set.push(w);
        }
    }
    let dyn8 = greedy_separated(&words, 8.0 * eps, tau).len();
    let ext = greedy_separated(&words, eps, inf);
    let net_ok = words.iter().all(|w| ext.iter().any(|e| tau(e, w) < 4.0 * eps));

    Ok(DynamicalReport {
        n,
        m,
        j,
        epsilon: eps,
        trajectories: words.len(),
        projection_cells,
        projection_count: proj_sep.len(),
        dynamical_count: dyn_set.len(),
        dynamical_count_8eps: dyn8,
        extended_count: ext.len(),
        net_ok,
        truncation_negligible: 2f64.powi(-(m as i32) + 2) < eps,
        lower_ok: proj_sep.len() <= dyn_set.len(),
        upper_ok: dyn8 <= ext.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(b: u32) -> DyadicGrid {
        DyadicGrid::new(b).unwrap()
    }

    #[test]
    fn three_points_two_cells() {
        let pts: Vec<Block> = [0.0, 0.5, 1.0].iter().map(|&v| Block::new(vec![v], g(1)).unwrap()).collect();
        assert_eq!(cloud_cell_count(&pts, 1).unwrap(), 2);
    }

    #[test]
    fn resolution_error() {
        let pts = vec![Block::zeros(1, g(2))];
        assert!(matches!(cloud_cell_count(&pts, 3), Err(Error::Resolution { .. })));
    }

    #[test]
    fn single_point_has_dimension_zero() {
        let pts = vec![Block::zeros(2, g(4))];
        let e = box_dimension_estimate(&pts, &[2, 3, 4]).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn full_binary_per_scale_value() {
        let e = mmdim_estimate(&SubshiftFamily::full_binary(), &[1, 2, 3], &[2, 3, 4], g(4), 1000).unwrap();
        for (j, v) in &e.per_epsilon {
            assert!((v - 1.0 / *j as f64).abs() < 1e-12);
        }
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn single_trajectory_counts_one() {
        let fam = SubshiftFamily::FullShift { alphabet: crate::model::Alphabet::Finite(vec![0.0]) };
        let r = dynamical_covering_check(&fam, 3, 1, 1, g(1), 100).unwrap();
        assert_eq!((r.projection_count, r.dynamical_count), (1, 1));
    }
}
