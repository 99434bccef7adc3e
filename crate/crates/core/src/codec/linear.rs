//! Random linear encoder with a nearest-admissible-word decoder.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DyadicGrid, SubshiftFamily};
use crate::rng;

/// Images closer than this count as collisions.
pub const SEPARATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearCodec {
    pub family: SubshiftFamily,
    pub grid: DyadicGrid,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Row `r` is drawn from stream `r`, so a larger `k` extends the matrix.
    pub matrix: Vec<Vec<f64>>,
    /// Common divisor applied after the per-row offset.
    pub scale: f64,
    pub offsets: Vec<f64>,
    pub words: Vec<Vec<f64>>,
    pub images: Vec<Vec<f64>>,
}

fn matrix_row(seed: u64, row: usize, n: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, row as u64);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

impl LinearCodec {
    pub fn new(family: &SubshiftFamily, n: usize, k: usize, seed: u64, grid: DyadicGrid, budget: u64) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::param(format!("linear codec needs 1 <= k < n, got k={k}, n={n}")));
        }
        let matrix: Vec<Vec<f64>> = (0..k).map(|r| matrix_row(seed, r, n)).collect();
        let lo: Vec<f64> = matrix.iter().map(|row| row.iter().map(|a| a.min(0.0)).sum()).collect();
        let hi: Vec<f64> = matrix.iter().map(|row| row.iter().map(|a| a.max(0.0)).sum()).collect();
        let scale = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
        let words: Vec<Vec<f64>> =
            family.enumerate_words(n, grid, budget)?.into_iter().map(|b| b.into_values()).collect();
        let mut codec = Self {
            family: family.clone(),
            grid,
            n,
            k,
            seed,
            matrix,
            scale,
            offsets: lo,
            words,
            images: Vec::new(),
        };
        codec.images = codec.words.iter().map(|w| codec.apply(w)).collect();
        Ok(codec)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offsets)
            .map(|(row, off)| (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - off) / self.scale)
            .collect()
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: x.len() });
        }
        Ok(self.apply(x))
    }

    /// Nearest enumerated word in Euclidean distance; near-ties go to the
    /// lexicographically first word.
    pub fn decode(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.k {
            return Err(Error::Dimension { expected: self.k, got: y.len() });
        }
        let dist = |im: &Vec<f64>| im.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let best = self.images.iter().map(dist).fold(f64::INFINITY, f64::min);
        let i = self.images.iter().position(|im| dist(im) <= best + SEPARATION_TOL).unwrap_or(0);
        Ok(self.words[i].clone())
    }

    /// Operator norm of the encoder from `∞` to `∞`.
    pub fn encoder_constant(&self) -> f64 {
        self.matrix.iter().map(|r| r.iter().map(|a| a.abs()).sum::<f64>()).fold(0.0, f64::max) / self.scale
    }

    /// Smallest ∞-distance between images of distinct words.
    pub fn min_image_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.images.len() {
            for j in i + 1..self.images.len() {
                let d = self.images[i].iter().zip(&self.images[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                best = best.min(d);
            }
        }
        best
    }

    pub fn injective(&self) -> bool {
        self.min_image_separation() > SEPARATION_TOL
    }

    /// `sup ‖x - x'‖_∞ / ‖Ax - Ax'‖_∞` over enumerated word pairs.
    pub fn inverse_constant(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.words.len() {
            for j in i + 1..self.words.len() {
                let dx = self.words[i].iter().zip(&self.words[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let dy = self.images[i].iter().zip(&self.images[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(if dy > 0.0 { dx / dy } else { f64::INFINITY });
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_extend_with_k() {
        let fam = SubshiftFamily::sparse(4, 1);
        let g = DyadicGrid::new(2).unwrap();
        let a = LinearCodec::new(&fam, 4, 2, 9, g, 1000).unwrap();
        let b = LinearCodec::new(&fam, 4, 3, 9, g, 1000).unwrap();
        assert_eq!(a.matrix[..], b.matrix[..2]);
    }

    #[test]
    fn image_in_unit_cube() {
        let fam = SubshiftFamily::sparse(4, 1);
        let c = LinearCodec::new(&fam, 4, 3, 1, DyadicGrid::new(2).unwrap(), 1000).unwrap();
        for corner in [[0.0; 4], [1.0; 4]] {
            assert!(c.encode(&corner).unwrap().iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        }
    }

    #[test]
    fn rejects_k_at_least_n() {
        let fam = SubshiftFamily::sparse(4, 1);
        assert!(LinearCodec::new(&fam, 4, 4, 1, DyadicGrid::new(2).unwrap(), 1000).is_err());
    }
}
