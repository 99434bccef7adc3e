//! Blocks, norms, subshift families and stationary measures.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Refuse enumerations larger than this unless the caller raises it.
pub const DEFAULT_WORD_BUDGET: u64 = 100_000_000;

/// Coordinates `i * 2^-bits` for `0 <= i <= 2^bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DyadicGrid {
    bits: u32,
}

impl DyadicGrid {
    pub const DEFAULT_BITS: u32 = 6;

    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 24 {
            return Err(Error::param(format!("grid bits must lie in 1..=24, got {bits}")));
        }
        Ok(Self { bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Number of grid steps; the grid has `levels() + 1` points.
    pub fn levels(self) -> u32 {
        1 << self.bits
    }

    pub fn step(self) -> f64 {
        1.0 / self.levels() as f64
    }

    pub fn value(self, index: u32) -> f64 {
        index as f64 / self.levels() as f64
    }

    /// Exact numerator of `x`, or an error if `x` is not a grid point.
    pub fn index_of(self, x: f64) -> Result<u32> {
        let scaled = x * self.levels() as f64;
        if !(0.0..=1.0).contains(&x) || scaled.fract() != 0.0 {
            return Err(Error::OffGrid { value: x, bits: self.bits });
        }
        Ok(scaled as u32)
    }

    pub fn contains(self, x: f64) -> bool {
        self.index_of(x).is_ok()
    }

    /// Nearest grid point (ties upward), clamped into `[0,1]`.
    pub fn quantize(self, x: f64) -> f64 {
        self.value(self.quantize_index(x))
    }

    pub fn quantize_index(self, x: f64) -> u32 {
        let l = self.levels() as f64;
        (x.clamp(0.0, 1.0) * l + 0.5).floor().min(l) as u32
    }

    pub fn points(self) -> impl Iterator<Item = f64> {
        (0..=self.levels()).map(move |i| self.value(i))
    }
}

impl Default for DyadicGrid {
    fn default() -> Self {
        Self { bits: Self::DEFAULT_BITS }
    }
}

/// Index of the dyadic cell of side `2^-j` containing `x`; cells are
/// half-open except the last, which is closed.
pub fn cell_of(x: f64, j: u32) -> u32 {
    let side = 1u64 << j;
    let c = (x * side as f64).floor();
    c.clamp(0.0, (side - 1) as f64) as u32
}

/// [`cell_of`] for a grid numerator, without leaving integer arithmetic.
pub fn cell_of_index(index: u32, bits: u32, j: u32) -> u32 {
    debug_assert!(j <= bits);
    (index >> (bits - j)).min((1 << j) - 1)
}

/// Norm index `p` in `[1, ∞]`. Distances are normalized by block length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Norm {
    P(f64),
    Inf,
}

impl Norm {
    pub fn p(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Norm::Inf)
        } else if p >= 1.0 {
            Ok(Norm::P(p))
        } else {
            Err(Error::param(format!("norm index must be >= 1, got {p}")))
        }
    }

    /// `((1/n) Σ |x_k - y_k|^p)^(1/p)`, or the max for `p = ∞`.
    /// Callers guarantee equal lengths.
    pub fn dist(self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self {
            Norm::Inf => x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            Norm::P(p) => {
                if x.is_empty() {
                    return 0.0;
                }
                let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(p)).sum();
                (s / x.len() as f64).powf(1.0 / p)
            }
        }
    }

    pub fn exponent(self) -> f64 {
        match self {
            Norm::P(p) => p,
            Norm::Inf => f64::INFINITY,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::P(p) => write!(f, "{p}"),
            Norm::Inf => write!(f, "inf"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Norm::Inf),
            t => t
                .parse::<f64>()
                .map_err(|_| Error::param(format!("cannot parse norm index {s:?}")))
                .and_then(Norm::p),
        }
    }
}

impl TryFrom<String> for Norm {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Norm> for String {
    fn from(n: Norm) -> String {
        n.to_string()
    }
}

/// A window `x|_0^{n-1}` with every coordinate on a dyadic grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    values: Vec<f64>,
    grid: DyadicGrid,
}

impl Block {
    pub fn new(values: Vec<f64>, grid: DyadicGrid) -> Result<Self> {
        for &v in &values {
            grid.index_of(v)?;
        }
        Ok(Self { values, grid })
    }

    pub fn from_indices(indices: &[u32], grid: DyadicGrid) -> Self {
        let values = indices.iter().map(|&i| grid.value(i.min(grid.levels()))).collect();
        Self { values, grid }
    }

    pub fn zeros(n: usize, grid: DyadicGrid) -> Self {
        Self { values: vec![0.0; n], grid }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn indices(&self) -> Vec<u32> {
        self.values
            .iter()
            .map(|&v| (v * self.grid.levels() as f64) as u32)
            .collect()
    }

    /// Indices of the nonzero coordinates.
    pub fn support(&self) -> Vec<usize> {
        support(&self.values)
    }

    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    /// Decimal fields with exactly `bits` fractional digits, which is exact
    /// for multiples of `2^-bits`.
    pub fn csv_fields(&self) -> Vec<String> {
        let d = self.grid.bits() as usize;
        self.values.iter().map(|v| format!("{v:.d$}")).collect()
    }
}

pub fn support(x: &[f64]) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| i).collect()
}

pub fn norm_distance(x: &Block, y: &Block, p: Norm) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), got: y.len() });
    }
    Ok(p.dist(x.values(), y.values()))
}

/// `Σ_{|i|≤w} 2^{-|i|} |x_i - y_i|` for windows of length `2w+1` centred at
/// index 0. Dropping the coordinates outside the window changes the value
/// by at most `2^{-w+1}`.
pub fn tau_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), got: y.len() });
    }
    if x.len().is_multiple_of(2) {
        return Err(Error::param("tau windows must have odd length 2w+1"));
    }
    let w = (x.len() / 2) as i64;
    Ok(x.iter()
        .zip(y)
        .enumerate()
        .map(|(k, (a, b))| {
            let i = (k as i64 - w).unsigned_abs() as i32;
            (a - b).abs() * 2f64.powi(-i)
        })
        .sum())
}

/// Bound on the part of the τ sum lost by truncating to `|i| <= w`.
pub fn tau_truncation_bound(w: usize) -> f64 {
    2f64.powi(-(w as i32) + 2)
}

/// Letter set of a full shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alphabet {
    Grid,
    Finite(Vec<f64>),
}

/// Parametric admissible-trajectory sets `S ⊂ [0,1]^Z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SubshiftFamily {
    FullShift { alphabet: Alphabet },
    /// At most `k` nonzeros in every window of length `n`.
    #[serde(rename = "sparse")]
    SparseNK { n: usize, k: usize },
    /// Shifts of `[0,2^-m]^m` on `m` consecutive coordinates, `m <= m_max`.
    VanishingCubes { m_max: u32 },
    /// `{0} ∪ {1/k : k <= n_max}` rounded to the grid.
    ReciprocalAlphabet { n_max: u32 },
}

impl SubshiftFamily {
    pub fn full_grid() -> Self {
        SubshiftFamily::FullShift { alphabet: Alphabet::Grid }
    }

    pub fn full_binary() -> Self {
        SubshiftFamily::FullShift { alphabet: Alphabet::Finite(vec![0.0, 1.0]) }
    }

    pub fn sparse(n: usize, k: usize) -> Self {
        SubshiftFamily::SparseNK { n, k }
    }

    pub fn label(&self) -> String {
        match self {
            SubshiftFamily::FullShift { alphabet: Alphabet::Grid } => "full-grid".into(),
            SubshiftFamily::FullShift { alphabet: Alphabet::Finite(a) } => {
                let parts: Vec<String> = a.iter().map(|v| v.to_string()).collect();
                format!("full:{}", parts.join("|"))
            }
            SubshiftFamily::SparseNK { n, k } => format!("sparse:N={n},K={k}"),
            SubshiftFamily::VanishingCubes { m_max } => format!("vanishing-cubes:m={m_max}"),
            SubshiftFamily::ReciprocalAlphabet { n_max } => format!("reciprocal:n={n_max}"),
        }
    }

    pub fn validate(&self, grid: DyadicGrid) -> Result<()> {
        match self {
            SubshiftFamily::FullShift { alphabet: Alphabet::Finite(a) } => {
                if a.is_empty() {
                    return Err(Error::param("finite alphabet is empty"));
                }
                for &v in a {
                    grid.index_of(v)?;
                }
                Ok(())
            }
            SubshiftFamily::FullShift { .. } => Ok(()),
            SubshiftFamily::SparseNK { n, k } => {
                if *n == 0 || k > n {
                    Err(Error::param(format!("sparse family needs 1 <= K <= N, got N={n}, K={k}")))
                } else {
                    Ok(())
                }
            }
            SubshiftFamily::VanishingCubes { m_max } | SubshiftFamily::ReciprocalAlphabet { n_max: m_max } => {
                if *m_max == 0 {
                    Err(Error::param("family parameter must be positive"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Sorted, deduplicated letter numerators for alphabet-type families.
    pub fn letters(&self, grid: DyadicGrid) -> Option<Vec<u32>> {
        let mut out: Vec<u32> = match self {
            SubshiftFamily::FullShift { alphabet: Alphabet::Grid } => (0..=grid.levels()).collect(),
            SubshiftFamily::FullShift { alphabet: Alphabet::Finite(a) } => {
                a.iter().filter_map(|&v| grid.index_of(v).ok()).collect()
            }
            SubshiftFamily::ReciprocalAlphabet { n_max } => std::iter::once(0)
                .chain((1..=*n_max).map(|k| grid.quantize_index(1.0 / k as f64)))
                .collect(),
            _ => return None,
        };
        out.sort_unstable();
        out.dedup();
        Some(out)
    }

    /// Whether the window extends to an admissible bi-infinite trajectory.
    pub fn contains(&self, window: &Block) -> bool {
        let grid = window.grid();
        match window.values().iter().map(|&v| grid.index_of(v)).collect::<Result<Vec<_>>>() {
            Ok(idx) => self.contains_indices(&idx, grid),
            Err(_) => matches!(self, SubshiftFamily::FullShift { alphabet: Alphabet::Grid }),
        }
    }

    pub fn contains_indices(&self, w: &[u32], grid: DyadicGrid) -> bool {
        match self {
            SubshiftFamily::SparseNK { n, k } => {
                let span = (*n).min(w.len());
                if span == 0 {
                    return true;
                }
                let mut count = w[..span].iter().filter(|&&v| v != 0).count();
                if count > *k {
                    return false;
                }
                for i in span..w.len() {
                    count += (w[i] != 0) as usize;
                    count -= (w[i - span] != 0) as usize;
                    if count > *k {
                        return false;
                    }
                }
                true
            }
            SubshiftFamily::VanishingCubes { m_max } => {
                let nz: Vec<usize> = (0..w.len()).filter(|&i| w[i] != 0).collect();
                match (nz.first(), nz.last()) {
                    (Some(&a), Some(&b)) => {
                        let span = (b - a + 1) as u32;
                        let top = w.iter().copied().max().unwrap_or(0);
                        span <= *m_max && top <= cube_bound(span, grid)
                    }
                    _ => true,
                }
            }
            _ => {
                let letters = self.letters(grid).unwrap_or_default();
                w.iter().all(|v| letters.binary_search(v).is_ok())
            }
        }
    }

    /// Number of grid words of length `n` (exact for alphabet and sparse
    /// families, an upper estimate for vanishing cubes).
    pub fn word_count_estimate(&self, n: usize, grid: DyadicGrid) -> f64 {
        match self {
            SubshiftFamily::SparseNK { n: big_n, k } => sparse_word_count(*big_n, *k, n, grid.levels() as f64),
            SubshiftFamily::VanishingCubes { m_max } => {
                1.0 + (1..=*m_max)
                    .map(|m| {
                        let vals = (cube_bound(m, grid) + 1) as f64;
                        (n + m as usize - 1) as f64 * vals.powi(m.min(n as u32) as i32)
                    })
                    .sum::<f64>()
            }
            _ => (self.letters(grid).map_or(0, |l| l.len()) as f64).powi(n as i32),
        }
    }

    fn check_budget(&self, n: usize, grid: DyadicGrid, budget: u64) -> Result<()> {
        let est = self.word_count_estimate(n, grid);
        if est > budget as f64 {
            return Err(Error::Budget {
                what: format!("words of length {n} in {}", self.label()),
                estimate: est,
                budget,
            });
        }
        Ok(())
    }

    /// Stream every admissible grid word of length `n`, as numerators, in
    /// lexicographic order. Returns the number of words visited.
    pub fn for_each_word<F: FnMut(&[u32])>(&self, n: usize, grid: DyadicGrid, budget: u64, mut visit: F) -> Result<u64> {
        self.validate(grid)?;
        self.check_budget(n, grid, budget)?;
        let mut buf = vec![0u32; n];
        let mut count = 0u64;
        let mut emit = |w: &[u32]| {
            count += 1;
            visit(w)
        };
        match self {
            SubshiftFamily::SparseNK { n: big_n, k } => {
                walk_sparse(&mut buf, 0, *big_n, *k, grid.levels(), &mut emit);
            }
            SubshiftFamily::VanishingCubes { m_max } => {
                walk_cubes(&mut buf, 0, None, 0, *m_max, grid, &mut emit);
            }
            _ => {
                let letters = self.letters(grid).unwrap_or_default();
                walk_letters(&mut buf, 0, &letters, &mut emit);
            }
        }
        Ok(count)
    }

    /// `π_n(S)` on the grid, lexicographically ordered.
    pub fn enumerate_words(&self, n: usize, grid: DyadicGrid, budget: u64) -> Result<Vec<Block>> {
        let mut out = Vec::new();
        self.for_each_word(n, grid, budget, |w| out.push(Block::from_indices(w, grid)))?;
        Ok(out)
    }

    pub fn enumerate_indices(&self, n: usize, grid: DyadicGrid, budget: u64) -> Result<Vec<Vec<u32>>> {
        let mut out = Vec::new();
        self.for_each_word(n, grid, budget, |w| out.push(w.to_vec()))?;
        Ok(out)
    }

    /// Block lengths used by the metric mean dimension estimate.
    pub fn default_mmdim_schedule(&self) -> Vec<usize> {
        match self {
            SubshiftFamily::SparseNK { n, .. } => vec![*n, 2 * n, 3 * n],
            SubshiftFamily::VanishingCubes { m_max } => {
                let m = *m_max as usize;
                vec![m, 2 * m, 4 * m, 8 * m, 16 * m]
            }
            _ => vec![1, 2, 3],
        }
    }

    /// Block lengths used by the mean box dimension estimate.
    pub fn default_mbdim_schedule(&self) -> Vec<usize> {
        match self {
            SubshiftFamily::VanishingCubes { m_max } => (1..=*m_max as usize).collect(),
            _ => self.default_mmdim_schedule(),
        }
    }
}

fn cube_bound(m: u32, grid: DyadicGrid) -> u32 {
    if m > grid.bits() {
        0
    } else {
        1 << (grid.bits() - m)
    }
}

fn sparse_word_count(big_n: usize, k: usize, n: usize, g: f64) -> f64 {
    // Transfer over the nonzero pattern of the last N-1 positions.
    let width = big_n.saturating_sub(1).min(n);
    if width > 20 {
        return f64::INFINITY;
    }
    let mask = (1usize << width) - 1;
    let mut cur = vec![0.0f64; 1 << width];
    cur[0] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0f64; 1 << width];
        for (s, &c) in cur.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            next[(s << 1) & mask] += c;
            if (s.count_ones() as usize) < k || (big_n == 1 && k >= 1) {
                next[((s << 1) | 1) & mask] += c * g;
            }
        }
        cur = next;
    }
    cur.iter().sum()
}

fn walk_sparse<F: FnMut(&[u32])>(buf: &mut [u32], pos: usize, big_n: usize, k: usize, levels: u32, emit: &mut F) {
    if pos == buf.len() {
        emit(buf);
        return;
    }
    buf[pos] = 0;
    walk_sparse(buf, pos + 1, big_n, k, levels, emit);
    let lo = (pos + 1).saturating_sub(big_n);
    let seen = buf[lo..pos].iter().filter(|&&v| v != 0).count();
    if seen < k {
        for v in 1..=levels {
            buf[pos] = v;
            walk_sparse(buf, pos + 1, big_n, k, levels, emit);
        }
        buf[pos] = 0;
    }
}

fn walk_cubes<F: FnMut(&[u32])>(
    buf: &mut [u32],
    pos: usize,
    first: Option<usize>,
    top: u32,
    m_max: u32,
    grid: DyadicGrid,
    emit: &mut F,
) {
    if pos == buf.len() {
        emit(buf);
        return;
    }
    buf[pos] = 0;
    walk_cubes(buf, pos + 1, first, top, m_max, grid, emit);
    let start = first.unwrap_or(pos);
    let span = (pos - start + 1) as u32;
    if span > m_max {
        return;
    }
    let bound = cube_bound(span, grid);
    if top > bound {
        return;
    }
    for v in 1..=bound {
        buf[pos] = v;
        walk_cubes(buf, pos + 1, Some(start), top.max(v), m_max, grid, emit);
    }
    buf[pos] = 0;
}

fn walk_letters<F: FnMut(&[u32])>(buf: &mut [u32], pos: usize, letters: &[u32], emit: &mut F) {
    if pos == buf.len() {
        emit(buf);
        return;
    }
    for &l in letters {
        buf[pos] = l;
        walk_letters(buf, pos + 1, letters, emit);
    }
}

/// A point mass of a discrete marginal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub mass: f64,
}

/// Stationary processes supported in a subshift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSpec {
    /// Coordinates i.i.d. with the given marginal.
    ProductIid { marginal: Vec<Atom> },
    /// `(1/N) Σ_j σ^j_*(⊗ν)` where ν is uniform on the grid over the first
    /// `k` coordinates of each length-`n` block and zero elsewhere.
    ShiftAverageProduct { n: usize, k: usize },
    /// Weighted sample windows; `n`-marginals read their first `n` entries.
    Empirical { windows: Vec<Vec<f64>>, weights: Vec<f64> },
}

/// Exact law of `x|_0^{n-1}` as grid numerators in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    pub grid: DyadicGrid,
    pub words: Vec<Vec<u32>>,
    pub probs: Vec<f64>,
}

impl Marginal {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn values(&self, i: usize) -> Vec<f64> {
        self.words[i].iter().map(|&v| self.grid.value(v)).collect()
    }

    pub fn entropy_bits(&self) -> f64 {
        self.probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
    }
}

const MASS_TOL: f64 = 1e-12;

impl MeasureSpec {
    pub fn uniform_iid(values: &[f64]) -> Self {
        let mass = 1.0 / values.len() as f64;
        MeasureSpec::ProductIid { marginal: values.iter().map(|&value| Atom { value, mass }).collect() }
    }

    pub fn uniform_grid_iid(grid: DyadicGrid) -> Self {
        Self::uniform_iid(&grid.points().collect::<Vec<_>>())
    }

    pub fn point_mass(value: f64) -> Self {
        MeasureSpec::ProductIid { marginal: vec![Atom { value, mass: 1.0 }] }
    }

    pub fn label(&self) -> String {
        match self {
            MeasureSpec::ProductIid { marginal } if marginal.len() == 1 => {
                format!("point-mass:{}", marginal[0].value)
            }
            MeasureSpec::ProductIid { marginal } => format!("iid:{}-atoms", marginal.len()),
            MeasureSpec::ShiftAverageProduct { n, k } => format!("sparse-shift-avg:N={n},K={k}"),
            MeasureSpec::Empirical { windows, .. } => format!("empirical:{}-windows", windows.len()),
        }
    }

    pub fn validate(&self, grid: DyadicGrid) -> Result<()> {
        let check_mass = |masses: &mut dyn Iterator<Item = f64>| -> Result<()> {
            let mut total = 0.0;
            for m in masses {
                if !(m >= 0.0) {
                    return Err(Error::Pmf(format!("negative or NaN mass {m}")));
                }
                total += m;
            }
            if (total - 1.0).abs() > MASS_TOL {
                return Err(Error::Pmf(format!("masses sum to {total}")));
            }
            Ok(())
        };
        match self {
            MeasureSpec::ProductIid { marginal } => {
                for a in marginal {
                    grid.index_of(a.value)?;
                }
                check_mass(&mut marginal.iter().map(|a| a.mass))
            }
            MeasureSpec::ShiftAverageProduct { n, k } => {
                if *n == 0 || k > n {
                    Err(Error::param(format!("shift-average measure needs 1 <= K <= N, got N={n}, K={k}")))
                } else {
                    Ok(())
                }
            }
            MeasureSpec::Empirical { windows, weights } => {
                if windows.len() != weights.len() || windows.is_empty() {
                    return Err(Error::Pmf("windows and weights must be nonempty and of equal length".into()));
                }
                for w in windows {
                    for &v in w {
                        grid.index_of(v)?;
                    }
                }
                check_mass(&mut weights.iter().copied())
            }
        }
    }

    /// Exact `n`-marginal; refuses supports larger than `budget`.
    pub fn marginal(&self, n: usize, grid: DyadicGrid, budget: u64) -> Result<Marginal> {
        self.validate(grid)?;
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        let over = |est: f64| Error::Budget { what: format!("{}-marginal of {}", n, self.label()), estimate: est, budget };
        match self {
            MeasureSpec::ProductIid { marginal } => {
                let est = (marginal.len() as f64).powi(n as i32);
                if est > budget as f64 {
                    return Err(over(est));
                }
                let atoms: Vec<(u32, f64)> = marginal
                    .iter()
                    .filter(|a| a.mass > 0.0)
                    .map(|a| (grid.index_of(a.value).unwrap_or(0), a.mass))
                    .collect();
                let mut buf = vec![0u32; n];
                product_walk(&mut buf, 0, 1.0, &|_| atoms.clone(), &mut acc);
            }
            MeasureSpec::ShiftAverageProduct { n: big_n, k } => {
                let active = |j: usize| (0..n).filter(|i| (i + j) % big_n < *k).count();
                let est: f64 = (0..*big_n).map(|j| ((grid.levels() + 1) as f64).powi(active(j) as i32)).sum();
                if est > budget as f64 {
                    return Err(over(est));
                }
                let uniform: Vec<(u32, f64)> =
                    (0..=grid.levels()).map(|v| (v, 1.0 / (grid.levels() + 1) as f64)).collect();
                for phase in 0..*big_n {
                    let mut part = BTreeMap::new();
                    let mut buf = vec![0u32; n];
                    let choices = |i: usize| {
                        if (i + phase) % big_n < *k {
                            uniform.clone()
                        } else {
                            vec![(0, 1.0)]
                        }
                    };
                    product_walk(&mut buf, 0, 1.0 / *big_n as f64, &choices, &mut part);
                    for (w, p) in part {
                        *acc.entry(w).or_insert(0.0) += p;
                    }
                }
            }
            MeasureSpec::Empirical { windows, weights } => {
                for (w, &p) in windows.iter().zip(weights) {
                    if w.len() < n {
                        return Err(Error::Dimension { expected: n, got: w.len() });
                    }
                    let key: Vec<u32> = w[..n].iter().map(|&v| grid.index_of(v)).collect::<Result<_>>()?;
                    *acc.entry(key).or_insert(0.0) += p;
                }
            }
        }
        let (words, probs) = acc.into_iter().unzip();
        Ok(Marginal { grid, words, probs })
    }

    /// `count` independent draws of `x|_0^{n-1}`; draw `i` uses stream `i`
    /// of `seed`, so the output does not depend on thread scheduling.
    pub fn sample_windows(&self, n: usize, count: usize, seed: u64, grid: DyadicGrid) -> Result<Vec<Block>> {
        self.validate(grid)?;
        if count == 0 {
            return Err(Error::param("sample count must be at least 1"));
        }
        if let MeasureSpec::Empirical { windows, .. } = self {
            if windows.iter().any(|w| w.len() < n) {
                return Err(Error::param(format!("empirical windows shorter than n={n}")));
            }
        }
        let sampler = Sampler::new(self, grid)?;
        Ok((0..count)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(seed, i as u64);
                Block::from_indices(&sampler.draw(n, &mut r), grid)
            })
            .collect())
    }
}

fn product_walk(
    buf: &mut [u32],
    pos: usize,
    p: f64,
    choices: &dyn Fn(usize) -> Vec<(u32, f64)>,
    acc: &mut BTreeMap<Vec<u32>, f64>,
) {
    if pos == buf.len() {
        *acc.entry(buf.to_vec()).or_insert(0.0) += p;
        return;
    }
    for (v, q) in choices(pos) {
        buf[pos] = v;
        product_walk(buf, pos + 1, p * q, choices, acc);
    }
}

enum Sampler<'a> {
    Iid { values: Vec<u32>, dist: WeightedIndex<f64> },
    Shift { n: usize, k: usize, levels: u32 },
    Empirical { windows: &'a [Vec<f64>], dist: WeightedIndex<f64>, grid: DyadicGrid },
}

impl<'a> Sampler<'a> {
    fn new(spec: &'a MeasureSpec, grid: DyadicGrid) -> Result<Self> {
        let weighted = |w: Vec<f64>| WeightedIndex::new(w).map_err(|e| Error::Pmf(e.to_string()));
        Ok(match spec {
            MeasureSpec::ProductIid { marginal } => Sampler::Iid {
                values: marginal.iter().map(|a| grid.index_of(a.value)).collect::<Result<_>>()?,
                dist: weighted(marginal.iter().map(|a| a.mass).collect())?,
            },
            MeasureSpec::ShiftAverageProduct { n, k } => Sampler::Shift { n: *n, k: *k, levels: grid.levels() },
            MeasureSpec::Empirical { windows, weights } => {
                Sampler::Empirical { windows, dist: weighted(weights.clone())?, grid }
            }
        })
    }

    fn draw<R: Rng>(&self, n: usize, r: &mut R) -> Vec<u32> {
        match self {
            Sampler::Iid { values, dist } => (0..n).map(|_| values[dist.sample(r)]).collect(),
            Sampler::Shift { n: big_n, k, levels } => {
                let phase = r.random_range(0..*big_n);
                (0..n)
                    .map(|i| if (i + phase) % big_n < *k { r.random_range(0..=*levels) } else { 0 })
                    .collect()
            }
            Sampler::Empirical { windows, dist, grid } => {
                let w = &windows[dist.sample(r)];
                w[..n].iter().map(|&v| grid.index_of(v).unwrap_or(0)).collect()
            }
        }
    }
}

/// Regularity classes of compressors and decompressors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum HolderSpec {
    Borel,
    Linear { norm: Norm, l: f64 },
    Lipschitz { norm: Norm, l: f64 },
    Holder { norm: Norm, l: f64, alpha: f64 },
}

impl HolderSpec {
    pub fn holder(l: f64, alpha: f64, norm: Norm) -> Result<Self> {
        let s = HolderSpec::Holder { norm, l, alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn lipschitz(l: f64, norm: Norm) -> Result<Self> {
        let s = HolderSpec::Lipschitz { norm, l };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (l, a) = match *self {
            HolderSpec::Borel => return Ok(()),
            HolderSpec::Linear { l, .. } | HolderSpec::Lipschitz { l, .. } => (l, 1.0),
            HolderSpec::Holder { l, alpha, .. } => (l, alpha),
        };
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param(format!("regularity constant must be positive, got {l}")));
        }
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::param(format!("exponent must lie in (0,1], got {a}")));
        }
        Ok(())
    }

    pub fn norm(&self) -> Option<Norm> {
        match *self {
            HolderSpec::Borel => None,
            HolderSpec::Linear { norm, .. } | HolderSpec::Lipschitz { norm, .. } | HolderSpec::Holder { norm, .. } => {
                Some(norm)
            }
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match *self {
            HolderSpec::Borel => None,
            HolderSpec::Linear { l, .. } | HolderSpec::Lipschitz { l, .. } | HolderSpec::Holder { l, .. } => Some(l),
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            HolderSpec::Borel => None,
            HolderSpec::Holder { alpha, .. } => Some(alpha),
            _ => Some(1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(b: u32) -> DyadicGrid {
        DyadicGrid::new(b).unwrap()
    }

    #[test]
    fn quantize_is_idempotent_and_exact() {
        let grid = g(3);
        for x in [0.0, 0.06, 0.0625, 0.3, 0.99, 1.0] {
            let q = grid.quantize(x);
            assert!(grid.contains(q));
            assert_eq!(grid.quantize(q), q);
        }
        assert!(grid.index_of(0.1).is_err());
    }

    #[test]
    fn norm_examples() {
        let grid = g(1);
        let x = Block::new(vec![0.0, 0.0], grid).unwrap();
        let y = Block::new(vec![1.0, 1.0], grid).unwrap();
        assert_eq!(norm_distance(&x, &y, Norm::Inf).unwrap(), 1.0);
        let a = Block::new(vec![1.0, 0.0], grid).unwrap();
        assert_eq!(norm_distance(&a, &x, Norm::P(1.0)).unwrap(), 0.5);
        let short = Block::zeros(3, grid);
        assert!(matches!(norm_distance(&x, &short, Norm::Inf), Err(Error::Dimension { .. })));
    }

    #[test]
    fn norm_parses() {
        assert_eq!("inf".parse::<Norm>().unwrap(), Norm::Inf);
        assert_eq!("2".parse::<Norm>().unwrap(), Norm::P(2.0));
        assert!("0.5".parse::<Norm>().is_err());
    }

    #[test]
    fn tau_examples() {
        let z = [0.0; 5];
        assert_eq!(tau_distance(&z, &z).unwrap(), 0.0);
        let mut e = z;
        e[2] = 1.0;
        assert_eq!(tau_distance(&e, &z).unwrap(), 1.0);
        assert_eq!(tau_distance(&[1.0; 5], &z).unwrap(), 2.5);
        assert!(tau_distance(&[0.0; 4], &[0.0; 4]).is_err());
        assert!(tau_distance(&[0.0; 3], &[0.0; 5]).is_err());
    }

    #[test]
    fn support_examples() {
        let grid = g(2);
        assert_eq!(Block::zeros(3, grid).support_size(), 0);
        let b = Block::new(vec![0.5, 0.0, 0.25], grid).unwrap();
        assert_eq!(b.support(), vec![0, 2]);
    }

    #[test]
    fn contains_examples() {
        let grid = g(3);
        let s = SubshiftFamily::sparse(4, 1);
        let ok = Block::new(vec![0.5, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0], grid).unwrap();
        let bad = Block::new(vec![0.5, 0.25, 0.0, 0.0], grid).unwrap();
        assert!(s.contains(&ok));
        assert!(!s.contains(&bad));
        let bin = SubshiftFamily::full_binary();
        assert!(bin.contains(&Block::new(vec![0.0, 1.0, 1.0, 0.0], grid).unwrap()));
        assert!(!bin.contains(&Block::new(vec![0.5], grid).unwrap()));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(SubshiftFamily::full_binary().enumerate_words(3, g(1), 100).unwrap().len(), 8);
        assert_eq!(SubshiftFamily::sparse(4, 1).enumerate_words(4, g(2), 100).unwrap().len(), 17);
        let w = SubshiftFamily::sparse(2, 1).enumerate_words(2, g(1), 100).unwrap();
        let vals: Vec<Vec<f64>> = w.iter().map(|b| b.values().to_vec()).collect();
        assert_eq!(vals, vec![vec![0.0, 0.0], vec![0.0, 0.5], vec![0.0, 1.0], vec![0.5, 0.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn enumeration_respects_budget() {
        let e = SubshiftFamily::full_grid().enumerate_words(8, g(6), 1000).unwrap_err();
        assert!(matches!(e, Error::Budget { .. }));
    }

    #[test]
    fn reciprocal_letters_dedupe() {
        let f = SubshiftFamily::ReciprocalAlphabet { n_max: 40 };
        let l = f.letters(g(3)).unwrap();
        assert_eq!(l[0], 0);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
        assert!(l.len() < 41);
    }

    #[test]
    fn iid_sampling_is_reproducible() {
        let m = MeasureSpec::uniform_iid(&[0.0, 1.0]);
        let a = m.sample_windows(4, 1, 11, g(1)).unwrap();
        let b = m.sample_windows(4, 1, 11, g(1)).unwrap();
        assert_eq!(a, b);
        assert!(a[0].values().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn mass_validation() {
        let bad = MeasureSpec::ProductIid { marginal: vec![Atom { value: 0.0, mass: 0.6 }] };
        assert!(matches!(bad.validate(g(1)), Err(Error::Pmf(_))));
    }

    #[test]
    fn holder_spec_validation() {
        assert!(HolderSpec::holder(1.0, 0.5, Norm::Inf).is_ok());
        assert!(HolderSpec::holder(1.0, 1.5, Norm::Inf).is_err());
        assert!(HolderSpec::holder(0.0, 0.5, Norm::Inf).is_err());
    }
}
