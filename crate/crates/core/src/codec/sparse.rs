//! Zero-error codec for `(N,K)`-sparse windows with a Hölder decoder.
//!
//! A window of length `ℓN` has at most `ℓK` nonzeros. The encoder picks a
//! support set `C(x)` of exactly `ℓK` indices, compresses the values on it
//! through the right inverse of a surjection `[0,1]^d → [0,1]^{ℓK}`, and
//! appends a signature coordinate in `[1/2, 1]` naming `C(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DyadicGrid, Norm};
use crate::spacefill::{cube_surjection, CurveMap};

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// All `size`-subsets of `{0,…,len-1}` in lexicographic order, addressed
/// by rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportFamily {
    pub len: usize,
    pub size: usize,
}

impl SupportFamily {
    pub fn new(len: usize, size: usize) -> Result<Self> {
        if size > len || len == 0 || size == 0 {
            return Err(Error::param(format!("support family needs 1 <= size <= len, got {size}, {len}")));
        }
        if len > 64 {
            return Err(Error::param("support windows longer than 64 are not supported"));
        }
        Ok(Self { len, size })
    }

    pub fn count(&self) -> u128 {
        binomial(self.len, self.size)
    }

    pub fn rank(&self, set: &[usize]) -> u128 {
        let mut r = 0u128;
        let mut next = 0usize;
        for (i, &a) in set.iter().enumerate() {
            for v in next..a {
                r += binomial(self.len - 1 - v, self.size - 1 - i);
            }
            next = a + 1;
        }
        r
    }

    pub fn unrank(&self, mut r: u128) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.size);
        let mut v = 0usize;
        for i in 0..self.size {
            loop {
                let below = binomial(self.len - 1 - v, self.size - 1 - i);
                if r < below {
                    break;
                }
                r -= below;
                v += 1;
            }
            out.push(v);
            v += 1;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.count()).map(|r| self.unrank(r))
    }
}

/// The support of `x` padded with its lowest-index zero coordinates up to
/// `size` elements.
pub fn support_selector(x: &[f64], size: usize) -> Result<Vec<usize>> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    if support.len() > size {
        return Err(Error::Admissibility { support: support.len(), max: size });
    }
    if size > x.len() {
        return Err(Error::param("support size exceeds the window length"));
    }
    let mut fill = size - support.len();
    let mut out: Vec<usize> = (0..x.len())
        .filter(|&i| {
            if x[i] != 0.0 {
                true
            } else if fill > 0 {
                fill -= 1;
                true
            } else {
                false
            }
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Signature coordinates of a support family, rounded onto a grid fine
/// enough that distinct ranks never collide.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signatures {
    pub count: u128,
    pub bits: u32,
}

impl Signatures {
    pub fn new(count: u128) -> Self {
        let bits = if count <= 1 { 1 } else { (2.0 * (count - 1) as f64).log2().ceil() as u32 + 2 };
        Self { count, bits }
    }

    pub fn value(&self, rank: u128) -> f64 {
        if self.count <= 1 {
            return 1.0;
        }
        let raw = 0.5 + rank as f64 / (2.0 * (self.count - 1) as f64);
        let scale = 2f64.powi(self.bits as i32);
        (raw * scale).round() / scale
    }

    /// Nearest signature, ties to the lower rank.
    pub fn nearest(&self, s: f64) -> u128 {
        if self.count <= 1 {
            return 0;
        }
        let guess = ((s - 0.5) * 2.0 * (self.count - 1) as f64).round().clamp(0.0, (self.count - 1) as f64) as u128;
        let lo = guess.saturating_sub(1);
        let hi = (guess + 1).min(self.count - 1);
        (lo..=hi)
            .min_by(|&a, &b| (self.value(a) - s).abs().total_cmp(&(self.value(b) - s).abs()))
            .unwrap_or(guess)
    }

    /// Smallest gap between distinct rounded signatures.
    pub fn min_separation(&self) -> f64 {
        if self.count <= 1 {
            return 0.5;
        }
        if self.count <= 1 << 16 {
            (1..self.count).map(|r| self.value(r) - self.value(r - 1)).fold(f64::INFINITY, f64::min)
        } else {
            // Rounding moves each signature by at most half a step.
            1.0 / (2.0 * (self.count - 1) as f64) - 2f64.powi(-(self.bits as i32))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Psi {
    /// `d >= ℓK`: keep the first `ℓK` coordinates, pad with zeros.
    Projection,
    Curve(CurveMap),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseCodec {
    pub big_n: usize,
    pub big_k: usize,
    pub ell: usize,
    /// `α = 1/q`.
    pub q: usize,
    pub grid: DyadicGrid,
    /// Source dimension of the surjection.
    pub d: usize,
    pub supports: SupportFamily,
    pub signatures: Signatures,
    pub psi: Psi,
}

impl SparseCodec {
    pub fn new(big_n: usize, big_k: usize, ell: usize, q: usize, grid: DyadicGrid) -> Result<Self> {
        if big_n == 0 || big_k == 0 || big_k > big_n || ell == 0 || q == 0 {
            return Err(Error::param(format!(
                "sparse codec needs 1 <= K <= N, l >= 1, q >= 1; got N={big_n}, K={big_k}, l={ell}, q={q}"
            )));
        }
        let s = ell * big_k;
        let d = s.div_ceil(q) + 1;
        let supports = SupportFamily::new(ell * big_n, s)?;
        let signatures = Signatures::new(supports.count());
        let psi = if d >= s { Psi::Projection } else { Psi::Curve(cube_surjection(d, s, grid.bits())?) };
        Ok(Self { big_n, big_k, ell, q, grid, d, supports, signatures, psi })
    }

    pub fn alpha(&self) -> f64 {
        1.0 / self.q as f64
    }

    pub fn n(&self) -> usize {
        self.ell * self.big_n
    }

    pub fn k(&self) -> usize {
        self.d + 1
    }

    pub fn support_size(&self) -> usize {
        self.ell * self.big_k
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    /// `αK/N + 3/(ℓN)`.
    pub fn rate_ceiling(&self) -> f64 {
        self.alpha() * self.big_k as f64 / self.big_n as f64 + 3.0 / self.n() as f64
    }

    fn admissible(&self, x: &[f64]) -> bool {
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return false;
        }
        let w = self.big_n.min(x.len());
        x.windows(w).all(|win| win.iter().filter(|&&v| v != 0.0).count() <= self.big_k)
    }

    fn phi(&self, u: &[f64]) -> Result<Vec<f64>> {
        match &self.psi {
            Psi::Projection => {
                let mut out: Vec<f64> = u.iter().map(|&v| self.grid.quantize(v)).collect();
                out.resize(self.d, 0.0);
                Ok(out)
            }
            Psi::Curve(c) => c.right_inverse(u),
        }
    }

    fn psi(&self, y: &[f64]) -> Result<Vec<f64>> {
        match &self.psi {
            Psi::Projection => Ok(y[..self.support_size()].iter().map(|v| v.clamp(0.0, 1.0)).collect()),
            Psi::Curve(c) => c.forward(y),
        }
    }

    /// Off-family inputs map to the zero codeword.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), got: x.len() });
        }
        if !self.admissible(x) {
            return Ok(vec![0.0; self.k()]);
        }
        let set = support_selector(x, self.support_size())?;
        let u: Vec<f64> = set.iter().map(|&i| x[i]).collect();
        let mut out = self.phi(&u)?;
        out.push(self.signatures.value(self.supports.rank(&set)));
        Ok(out)
    }

    pub fn decode(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.k() {
            return Err(Error::Dimension { expected: self.k(), got: y.len() });
        }
        let mut out = vec![0.0; self.n()];
        let s = y[self.d];
        if s == 0.0 {
            return Ok(out);
        }
        let set = self.supports.unrank(self.signatures.nearest(s));
        let vals = self.psi(&y[..self.d])?;
        for (&i, v) in set.iter().zip(vals) {
            out[i] = v;
        }
        Ok(out)
    }

    fn psi_constant(&self, norm: Norm) -> f64 {
        match (&self.psi, norm) {
            (Psi::Curve(c), _) => c.holder_constant(norm),
            (Psi::Projection, Norm::Inf) => 1.0,
            (Psi::Projection, Norm::P(p)) => (self.d as f64 / self.support_size() as f64).powf(1.0 / p),
        }
    }

    /// Hölder constant of the decoder at exponent `α` on the encoder image.
    /// Codewords with different signatures are at least `M` apart, so the
    /// jump between supports costs `M^{-α}`; within one support the
    /// surjection's constant applies.
    pub fn decoder_constant(&self, norm: Norm) -> f64 {
        let sep = self.signatures.min_separation().min(0.5);
        let a = self.alpha();
        match norm {
            Norm::Inf => (1.0 / sep.powf(a)).max(self.psi_constant(norm)),
            Norm::P(p) => {
                let k = self.k() as f64;
                let m = sep / k.powf(1.0 / p);
                let within = self.psi_constant(norm) * (k / self.d as f64).powf(a / p);
                (1.0 / m.powf(a)).max(within)
            }
        }
    }
}
