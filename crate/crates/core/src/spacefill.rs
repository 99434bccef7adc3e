//! Hilbert curves and Hölder surjections between unit cubes.
//!
//! The curve uses the transpose formulation of the m-dimensional Hilbert
//! curve: index bits interleave from the top bit of axis 0 downward, and the
//! first-order planar curve visits `(0,0),(0,1),(1,1),(1,0)`.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dimension::lsq_slope;
use crate::error::{Error, Result};
use crate::model::{DyadicGrid, Norm};
use crate::rng;

pub const ORIENTATION: &str = "reflected-gray";

fn check_dims(m: usize, b: u32) -> Result<()> {
    if m == 0 || b == 0 || m as u64 * b as u64 > 63 || b > 31 {
        return Err(Error::param(format!("curve needs m >= 1, b >= 1 and m*b <= 63, got m={m}, b={b}")));
    }
    Ok(())
}

fn transpose_to_axes(x: &mut [u32], b: u32) {
    let n = x.len();
    let top = 2u32 << (b - 1);
    let t = x[n - 1] >> 1;
    for i in (1..n).rev() {
        x[i] ^= x[i - 1];
    }
    x[0] ^= t;
    let mut q = 2u32;
    while q != top {
        let p = q - 1;
        for i in (0..n).rev() {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q <<= 1;
    }
}

fn axes_to_transpose(x: &mut [u32], b: u32) {
    let n = x.len();
    let top = 1u32 << (b - 1);
    let mut q = top;
    while q > 1 {
        let p = q - 1;
        for i in 0..n {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    for i in 1..n {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    let mut q = top;
    while q > 1 {
        if x[n - 1] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in x.iter_mut() {
        *v ^= t;
    }
}

/// Cell of the `h`-th step of the depth-`b` curve in `m` dimensions.
pub fn hilbert_axes(h: u64, m: usize, b: u32) -> Vec<u32> {
    let mut x = vec![0u32; m];
    for bit in 0..(m as u32 * b) {
        // Bit `bit` counted from the least significant end of `h`.
        if h >> bit & 1 == 1 {
            let level = bit / m as u32;
            let axis = m - 1 - (bit as usize % m);
            x[axis] |= 1 << level;
        }
    }
    transpose_to_axes(&mut x, b);
    x
}

/// Step index of a cell; inverse of [`hilbert_axes`].
pub fn hilbert_step(cell: &[u32], b: u32) -> u64 {
    let m = cell.len();
    let mut x = cell.to_vec();
    axes_to_transpose(&mut x, b);
    let mut h = 0u64;
    for level in (0..b).rev() {
        for v in &x {
            h = (h << 1) | (v >> level & 1) as u64;
        }
    }
    debug_assert!(m as u32 * b <= 63);
    h
}

/// Lower corner of the curve cell at parameter `t` (a multiple of
/// `2^{-m·b}`); `t = 1` is clamped to the last cell.
pub fn hilbert_point(t: f64, m: usize, b: u32) -> Result<Vec<f64>> {
    check_dims(m, b)?;
    let steps = 1u64 << (m as u32 * b);
    let scaled = t * steps as f64;
    if !(0.0..=1.0).contains(&t) || scaled.fract() != 0.0 {
        return Err(Error::OffGrid { value: t, bits: m as u32 * b });
    }
    let h = (scaled as u64).min(steps - 1);
    let side = (1u64 << b) as f64;
    Ok(hilbert_axes(h, m, b).into_iter().map(|c| c as f64 / side).collect())
}

/// Least parameter whose cell is the cell of `y`; coordinates are multiples
/// of `2^{-b}`, with `1` treated as the last cell.
pub fn hilbert_index(y: &[f64], b: u32) -> Result<f64> {
    check_dims(y.len(), b)?;
    let side = 1u32 << b;
    let cell: Vec<u32> = y
        .iter()
        .map(|&v| {
            let s = v * side as f64;
            if !(0.0..=1.0).contains(&v) || s.fract() != 0.0 {
                Err(Error::OffGrid { value: v, bits: b })
            } else {
                Ok((s as u32).min(side - 1))
            }
        })
        .collect::<Result<_>>()?;
    let steps = (1u64 << (y.len() as u32 * b)) as f64;
    Ok(hilbert_step(&cell, b) as f64 / steps)
}

/// `g: [0,1]^k → [0,1]^n` built from `k` copies of an `m`-dimensional
/// Hilbert curve, `m = ⌈n/k⌉`, with outputs concatenated and truncated to
/// `n`. Target points are on the closed grid `{0, 2^-b, …, 1}`; the curve
/// runs at depth `b+1` and cell `c` lands on `⌈c/2⌉·2^-b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMap {
    pub k: usize,
    pub n: usize,
    pub b: u32,
    pub m: usize,
    pub orientation: String,
}

impl CurveMap {
    pub fn exponent(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn is_identity(&self) -> bool {
        self.m == 1
    }

    fn depth(&self) -> u32 {
        self.b + 1
    }

    /// Bits per source coordinate of the parameter grid.
    pub fn param_bits(&self) -> u32 {
        if self.is_identity() {
            self.b
        } else {
            self.m as u32 * self.depth()
        }
    }

    pub fn target_grid(&self) -> DyadicGrid {
        DyadicGrid::new(self.b).expect("validated at construction")
    }

    /// A Hölder constant at exponent `1/m` in the normalized `p`-norm,
    /// valid on the parameter grid and its polygonal interpolation.
    pub fn holder_constant(&self, norm: Norm) -> f64 {
        if self.is_identity() {
            return 1.0;
        }
        match norm {
            Norm::Inf => 4.0,
            Norm::P(p) => 4.0 * (self.k as f64).powf(self.exponent() / p),
        }
    }

    fn corner(&self, h: u64) -> Vec<u32> {
        hilbert_axes(h, self.m, self.depth()).into_iter().map(|c| c.div_ceil(2)).collect()
    }

    fn block_forward(&self, t: f64) -> Vec<f64> {
        let steps = 1u64 << self.param_bits();
        let pos = t.clamp(0.0, 1.0) * steps as f64;
        let lo = (pos.floor() as u64).min(steps - 1);
        let frac = if lo == steps - 1 { 0.0 } else { pos - lo as f64 };
        let scale = (1u64 << self.b) as f64;
        let a = self.corner(lo);
        if frac == 0.0 {
            return a.into_iter().map(|v| v as f64 / scale).collect();
        }
        let c = self.corner(lo + 1);
        a.iter().zip(&c).map(|(&u, &v)| ((1.0 - frac) * u as f64 + frac * v as f64) / scale).collect()
    }

    /// The surjection `g`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.k {
            return Err(Error::Dimension { expected: self.k, got: x.len() });
        }
        if self.is_identity() {
            return Ok(x.iter().map(|v| v.clamp(0.0, 1.0)).collect());
        }
        let mut out: Vec<f64> = x.iter().flat_map(|&t| self.block_forward(t)).collect();
        out.truncate(self.n);
        Ok(out)
    }

    /// The right inverse `f`: quantize to the target grid, then take per
    /// block the least parameter mapping onto it. Truncated coordinates are
    /// taken to be 0.
    pub fn right_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: y.len() });
        }
        let grid = self.target_grid();
        if self.is_identity() {
            return Ok(y.iter().map(|&v| grid.quantize(v)).collect());
        }
        let steps = (1u64 << self.param_bits()) as f64;
        let top = (1u32 << self.depth()) - 1;
        let mut padded: Vec<u32> = y.iter().map(|&v| grid.quantize_index(v)).collect();
        padded.resize(self.k * self.m, 0);
        Ok(padded
            .chunks(self.m)
            .map(|block| {
                let options: Vec<Vec<u32>> = block
                    .iter()
                    .map(|&i| {
                        let mut o = vec![(2 * i).min(top)];
                        if i > 0 {
                            o.push(2 * i - 1);
                        }
                        o
                    })
                    .collect();
                let mut best = u64::MAX;
                let mut cell = vec![0u32; self.m];
                least_step(&options, 0, &mut cell, self.depth(), &mut best);
                best as f64 / steps
            })
            .collect())
    }

    /// Every target grid point of one block is hit by a parameter grid
    /// point. Blocks share the same curve, so one scan covers all of them.
    pub fn verify_surjective(&self, budget: u64) -> Result<bool> {
        if self.is_identity() {
            return Ok(true);
        }
        let steps = 1u64 << self.param_bits();
        if steps > budget {
            return Err(Error::Budget { what: "parameter grid scan".into(), estimate: steps as f64, budget });
        }
        let image: HashSet<Vec<u32>> = (0..steps).map(|h| self.corner(h)).collect();
        let full = ((1u64 << self.b) + 1).pow(self.m as u32);
        Ok(image.len() as u64 == full)
    }

    /// `g(f(y)) = y` on every target grid point.
    pub fn verify_right_inverse(&self, budget: u64) -> Result<bool> {
        let side = (1u64 << self.b) + 1;
        let total = (side as f64).powi(self.n as i32);
        if total > budget as f64 {
            return Err(Error::Budget { what: "target grid roundtrip".into(), estimate: total, budget });
        }
        Ok((0..side.pow(self.n as u32)).into_par_iter().all(|code| self.roundtrip_ok(code)))
    }

    /// [`Self::verify_right_inverse`] on `samples` seeded grid points.
    pub fn verify_right_inverse_sampled(&self, samples: u64, seed: u64) -> Result<bool> {
        let side = (1u64 << self.b) + 1;
        let n = self.n;
        Ok((0..samples).into_par_iter().all(|i| {
            let mut g = rng::stream(seed, i);
            let code = (0..n).fold(0u64, |acc, _| acc * side + g.random_range(0..side));
            self.roundtrip_ok(code)
        }))
    }

    fn roundtrip_ok(&self, mut code: u64) -> bool {
        let side = (1u64 << self.b) + 1;
        let grid = self.target_grid();
        let y: Vec<f64> = (0..self.n)
            .map(|_| {
                let v = grid.value((code % side) as u32);
                code /= side;
                v
            })
            .collect();
        self.right_inverse(&y).and_then(|x| self.forward(&x)).map(|z| z == y).unwrap_or(false)
    }
}

fn least_step(options: &[Vec<u32>], i: usize, cell: &mut [u32], depth: u32, best: &mut u64) {
    if i == options.len() {
        *best = (*best).min(hilbert_step(cell, depth));
        return;
    }
    for &o in &options[i] {
        cell[i] = o;
        least_step(options, i + 1, cell, depth, best);
    }
}

pub fn cube_surjection(k: usize, n: usize, b: u32) -> Result<CurveMap> {
    if k == 0 || k > n {
        return Err(Error::param(format!("surjection needs 1 <= k <= n, got k={k}, n={n}")));
    }
    DyadicGrid::new(b)?;
    let m = n.div_ceil(k);
    if m > 1 {
        check_dims(m, b + 1)?;
    }
    Ok(CurveMap { k, n, b, m, orientation: ORIENTATION.into() })
}

/// Where test pairs are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// The closed grid `{0, 2^-bits, …, 1}^dim`.
    Grid { dim: usize, bits: u32 },
    Points(Vec<Vec<f64>>),
}

impl Domain {
    fn dim(&self) -> usize {
        match self {
            Domain::Grid { dim, .. } => *dim,
            Domain::Points(p) => p.first().map_or(0, Vec::len),
        }
    }

    fn random_point<R: Rng>(&self, r: &mut R) -> Vec<f64> {
        match self {
            Domain::Grid { dim, bits } => {
                let side = 1u64 << bits;
                (0..*dim).map(|_| r.random_range(0..=side) as f64 / side as f64).collect()
            }
            Domain::Points(p) => p[r.random_range(0..p.len())].clone(),
        }
    }

    /// All pairs of grid neighbours, or `None` if there are more than `cap`.
    fn adjacent_pairs(&self, cap: u64) -> Option<Vec<(Vec<f64>, Vec<f64>)>> {
        let Domain::Grid { dim, bits } = self else { return None };
        let side = (1u64 << bits) + 1;
        let total = (side as f64).powi(*dim as i32) * *dim as f64;
        if total > cap as f64 {
            return None;
        }
        let scale = (1u64 << bits) as f64;
        let mut out = Vec::new();
        for code in 0..side.pow(*dim as u32) {
            let mut c = code;
            let idx: Vec<u64> = (0..*dim)
                .map(|_| {
                    let v = c % side;
                    c /= side;
                    v
                })
                .collect();
            let x: Vec<f64> = idx.iter().map(|&v| v as f64 / scale).collect();
            for a in 0..*dim {
                if idx[a] + 1 < side {
                    let mut y = x.clone();
                    y[a] = (idx[a] + 1) as f64 / scale;
                    out.push((x.clone(), y));
                }
            }
        }
        Some(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    /// Largest exponent consistent with the declared constant on all pairs.
    pub alpha_hat: f64,
    /// `sup ‖g(x)-g(y)‖ / ‖x-y‖^α` at the declared exponent.
    pub l_hat: f64,
    /// Log-log slope of the per-scale worst-case increment.
    pub envelope_slope: f64,
    pub pairs: usize,
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
}

/// Empirical Hölder exponent and constant of `map` against a declared
/// `(l, alpha)`, over `pair_budget` seeded random pairs plus grid-adjacent
/// pairs.
pub fn holder_estimate<F>(
    map: F,
    domain: &Domain,
    norm: Norm,
    declared_l: f64,
    declared_alpha: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<HolderReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if domain.dim() == 0 {
        return Err(Error::param("empty domain"));
    }
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..pair_budget)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            (domain.random_point(&mut r), domain.random_point(&mut r))
        })
        .collect();
    if let Some(adj) = domain.adjacent_pairs(pair_budget.max(1 << 16) as u64) {
        pairs.extend(adj);
    }
    let measured: Vec<(f64, f64, usize)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let dx = norm.dist(x, y);
            let gx = map(x)?;
            let gy = map(y)?;
            Ok((dx, norm.dist(&gx, &gy), i))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&(dx, _, _)| dx > 0.0)
        .collect();

    let mut alpha_hat = 1.0f64;
    let mut l_hat = 0.0f64;
    let mut worst = None;
    for &(dx, dg, i) in &measured {
        let a = if dg <= declared_l * dx {
            1.0
        } else if dg > declared_l {
            0.0
        } else {
            ((dg / declared_l).ln() / dx.ln()).clamp(0.0, 1.0)
        };
        alpha_hat = alpha_hat.min(a);
        let ratio = dg / dx.powf(declared_alpha);
        if ratio > l_hat {
            l_hat = ratio;
            worst = Some(i);
        }
    }

    let mut env: Vec<(i32, f64)> = Vec::new();
    for &(dx, dg, _) in &measured {
        // Bin (2^{-i-1}, 2^{-i}].
        let bin = (-dx.log2()).floor() as i32;
        match env.iter_mut().find(|(b, _)| *b == bin) {
            Some(e) => e.1 = e.1.max(dg),
            None => env.push((bin, dg)),
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        env.iter().filter(|(_, v)| *v > 0.0).map(|&(b, v)| (-(b as f64), v.log2())).unzip();

    Ok(HolderReport {
        alpha_hat,
        l_hat,
        envelope_slope: lsq_slope(&xs, &ys),
        pairs: measured.len(),
        worst_pair: worst.map(|i| pairs[i].clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_planar_order() {
        let cells: Vec<Vec<u32>> = (0..4).map(|h| hilbert_axes(h, 2, 1)).collect();
        assert_eq!(cells, vec![vec![0, 0], vec![0, 1], vec![1, 1], vec![1, 0]]);
    }

    #[test]
    fn origin() {
        assert_eq!(hilbert_point(0.0, 3, 2).unwrap(), vec![0.0; 3]);
        assert_eq!(hilbert_index(&[0.0, 0.0], 3).unwrap(), 0.0);
    }

    #[test]
    fn off_grid_rejected() {
        assert!(hilbert_point(0.3, 2, 2).is_err());
        assert!(hilbert_index(&[0.3, 0.0], 2).is_err());
    }

    #[test]
    fn identity_when_k_equals_n() {
        let c = cube_surjection(3, 3, 4).unwrap();
        assert!(c.is_identity());
        assert_eq!(c.exponent(), 1.0);
        let y = vec![0.25, 1.0, 0.0];
        assert_eq!(c.forward(&c.right_inverse(&y).unwrap()).unwrap(), y);
    }

    #[test]
    fn rejects_k_above_n() {
        assert!(cube_surjection(3, 2, 3).is_err());
    }

    #[test]
    fn constant_map_has_zero_constant() {
        let d = Domain::Grid { dim: 1, bits: 4 };
        let r = holder_estimate(|_| Ok(vec![0.5]), &d, Norm::Inf, 1.0, 1.0, 200, 3).unwrap();
        assert_eq!(r.l_hat, 0.0);
        assert_eq!(r.alpha_hat, 1.0);
    }
}
