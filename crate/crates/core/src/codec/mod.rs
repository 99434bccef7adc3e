//! Compressor/decompressor pairs, regularity checks and error functionals.

mod linear;
mod sparse;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use linear::{LinearCodec, SEPARATION_TOL};
pub use sparse::{binomial, support_selector, Psi, Signatures, SparseCodec, SupportFamily};

use crate::error::{Error, Result};
use crate::model::{cell_of, DyadicGrid, HolderSpec, MeasureSpec, Norm};
use crate::rng;
use crate::spacefill::{cube_surjection, CurveMap, Domain};

pub type MapFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;

/// Quantize to the grid, then take the right inverse of a cube surjection
/// `[0,1]^k → [0,1]^n` with `k = ⌈n/q⌉`; decode with the surjection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteCodec {
    pub q: usize,
    pub curve: CurveMap,
}

impl RouteCodec {
    pub fn new(n: usize, q: usize, grid: DyadicGrid) -> Result<Self> {
        if q == 0 || n == 0 {
            return Err(Error::param("route codec needs n >= 1 and q >= 1"));
        }
        Ok(Self { q, curve: cube_surjection(n.div_ceil(q), n, grid.bits())? })
    }
}

#[derive(Clone)]
enum Scheme {
    Identity,
    Sparse(Arc<SparseCodec>),
    Linear(Arc<LinearCodec>),
    Route(Arc<RouteCodec>),
    /// Blocks of an inner codec on a zero-padded window.
    Concat { inner: Box<CodecPair>, copies: usize },
    Custom { name: String, encoder: Arc<MapFn>, decoder: Arc<MapFn> },
}

/// An encoder `[0,1]^n → [0,1]^k` and decoder `[0,1]^k → [0,1]^n` with their
/// declared regularity.
#[derive(Clone)]
pub struct CodecPair {
    scheme: Scheme,
    n: usize,
    k: usize,
    encoder_spec: HolderSpec,
    decoder_spec: HolderSpec,
    seed: Option<u64>,
}

impl fmt::Debug for CodecPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CodecPair")
            .field("scheme", &self.scheme_name())
            .field("n", &self.n)
            .field("k", &self.k)
            .finish()
    }
}

/// Serializable description of a codec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodecDescriptor {
    pub scheme: String,
    pub n: usize,
    pub k: usize,
    pub rate: f64,
    pub seed: Option<u64>,
    pub encoder: HolderSpec,
    pub decoder: HolderSpec,
    pub params: serde_json::Value,
}

impl CodecPair {
    pub fn identity(n: usize) -> Self {
        let spec = HolderSpec::Lipschitz { norm: Norm::Inf, l: 1.0 };
        Self { scheme: Scheme::Identity, n, k: n, encoder_spec: spec, decoder_spec: spec, seed: None }
    }

    pub fn sparse(codec: SparseCodec, norm: Norm) -> Self {
        let decoder_spec = HolderSpec::Holder { norm, l: codec.decoder_constant(norm), alpha: codec.alpha() };
        Self {
            n: codec.n(),
            k: codec.k(),
            scheme: Scheme::Sparse(Arc::new(codec)),
            encoder_spec: HolderSpec::Borel,
            decoder_spec,
            seed: None,
        }
    }

    pub fn linear(codec: LinearCodec) -> Self {
        let encoder_spec = HolderSpec::Linear { norm: Norm::Inf, l: codec.encoder_constant() };
        let inv = codec.inverse_constant();
        let decoder_spec =
            if inv.is_finite() { HolderSpec::Lipschitz { norm: Norm::Inf, l: inv.max(1e-12) } } else { HolderSpec::Borel };
        Self {
            n: codec.n,
            k: codec.k,
            seed: Some(codec.seed),
            scheme: Scheme::Linear(Arc::new(codec)),
            encoder_spec,
            decoder_spec,
        }
    }

    pub fn route(codec: RouteCodec, norm: Norm) -> Self {
        let decoder_spec = HolderSpec::Holder {
            norm,
            l: codec.curve.holder_constant(norm),
            alpha: 1.0 / codec.q as f64,
        };
        Self {
            n: codec.curve.n,
            k: codec.curve.k,
            scheme: Scheme::Route(Arc::new(codec)),
            encoder_spec: HolderSpec::Borel,
            decoder_spec,
            seed: None,
        }
    }

    /// `⌈n/n0⌉` copies of `inner` on the zero-padded window. The decoder
    /// constant grows by the padding factor `(c·n0/n)^{1/p}`.
    pub fn concat(inner: CodecPair, n: usize) -> Result<Self> {
        if n < inner.n {
            return Err(Error::param("concatenated length shorter than the inner block"));
        }
        let copies = n.div_ceil(inner.n);
        let factor = concat_inflation(inner.n, copies, n, inner.decoder_spec.norm().unwrap_or(Norm::Inf));
        let decoder_spec = match inner.decoder_spec {
            HolderSpec::Holder { norm, l, alpha } => HolderSpec::Holder { norm, l: l * factor, alpha },
            HolderSpec::Lipschitz { norm, l } => HolderSpec::Lipschitz { norm, l: l * factor },
            other => other,
        };
        Ok(Self {
            k: copies * inner.k,
            n,
            encoder_spec: inner.encoder_spec,
            decoder_spec,
            seed: inner.seed,
            scheme: Scheme::Concat { inner: Box::new(inner), copies },
        })
    }

    pub fn custom(
        name: &str,
        n: usize,
        k: usize,
        encoder: Arc<MapFn>,
        decoder: Arc<MapFn>,
        encoder_spec: HolderSpec,
        decoder_spec: HolderSpec,
    ) -> Self {
        Self { scheme: Scheme::Custom { name: name.into(), encoder, decoder }, n, k, encoder_spec, decoder_spec, seed: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn encoder_spec(&self) -> HolderSpec {
        self.encoder_spec
    }

    pub fn decoder_spec(&self) -> HolderSpec {
        self.decoder_spec
    }

    pub fn as_sparse(&self) -> Option<&SparseCodec> {
        match &self.scheme {
            Scheme::Sparse(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_linear(&self) -> Option<&LinearCodec> {
        match &self.scheme {
            Scheme::Linear(l) => Some(l),
            _ => None,
        }
    }

    pub fn scheme_name(&self) -> String {
        match &self.scheme {
            Scheme::Identity => "identity".into(),
            Scheme::Sparse(_) => "sparse".into(),
            Scheme::Linear(_) => "linear-random".into(),
            Scheme::Route(_) => "quantizer-surjection".into(),
            Scheme::Concat { inner, .. } => format!("concat:{}", inner.scheme_name()),
            Scheme::Custom { name, .. } => name.clone(),
        }
    }

    pub fn descriptor(&self) -> CodecDescriptor {
        let params = match &self.scheme {
            Scheme::Sparse(s) => serde_json::json!({
                "N": s.big_n, "K": s.big_k, "l": s.ell, "q": s.q, "bits": s.grid.bits(), "d": s.d,
                "signature_bits": s.signatures.bits, "supports": s.supports.count().to_string(),
            }),
            Scheme::Linear(l) => serde_json::json!({
                "family": l.family, "bits": l.grid.bits(), "scale": l.scale, "injective": l.injective(),
            }),
            Scheme::Route(r) => serde_json::json!({ "q": r.q, "curve": r.curve }),
            Scheme::Concat { inner, copies } => serde_json::json!({ "copies": copies, "inner": inner.descriptor() }),
            _ => serde_json::Value::Null,
        };
        CodecDescriptor {
            scheme: self.scheme_name(),
            n: self.n,
            k: self.k,
            rate: self.rate(),
            seed: self.seed,
            encoder: self.encoder_spec,
            decoder: self.decoder_spec,
            params,
        }
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: x.len() });
        }
        match &self.scheme {
            Scheme::Identity => Ok(x.to_vec()),
            Scheme::Sparse(s) => s.encode(x),
            Scheme::Linear(l) => l.encode(x),
            Scheme::Route(r) => r.curve.right_inverse(x),
            Scheme::Concat { inner, copies } => {
                let mut padded = x.to_vec();
                padded.resize(inner.n * copies, 0.0);
                let mut out = Vec::with_capacity(self.k);
                for chunk in padded.chunks(inner.n) {
                    out.extend(inner.encode(chunk)?);
                }
                Ok(out)
            }
            Scheme::Custom { encoder, .. } => encoder(x),
        }
    }

    pub fn decode(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.k {
            return Err(Error::Dimension { expected: self.k, got: y.len() });
        }
        match &self.scheme {
            Scheme::Identity => Ok(y.to_vec()),
            Scheme::Sparse(s) => s.decode(y),
            Scheme::Linear(l) => l.decode(y),
            Scheme::Route(r) => r.curve.forward(y),
            Scheme::Concat { inner, .. } => {
                let mut out = Vec::with_capacity(self.n);
                for chunk in y.chunks(inner.k) {
                    out.extend(inner.decode(chunk)?);
                }
                out.truncate(self.n);
                Ok(out)
            }
            Scheme::Custom { decoder, .. } => decoder(y),
        }
    }

    pub fn roundtrip(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(x)?)
    }
}

/// Decoder-constant inflation from padding `n` up to `copies·n0`.
pub fn concat_inflation(n0: usize, copies: usize, n: usize, norm: Norm) -> f64 {
    match norm {
        Norm::Inf => 1.0,
        Norm::P(p) => ((copies * n0) as f64 / n as f64).powf(1.0 / p),
    }
}

/// Maps each point to the centre of its dyadic cell of side `2^-j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeQuantizer {
    pub k: usize,
    pub j: u32,
}

impl CubeQuantizer {
    pub fn epsilon(&self) -> f64 {
        2f64.powi(-(self.j as i32))
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.k {
            return Err(Error::Dimension { expected: self.k, got: x.len() });
        }
        let e = self.epsilon();
        Ok(x.iter().map(|&v| (cell_of(v, self.j) as f64 + 0.5) * e).collect())
    }

    pub fn codebook_size(&self) -> u128 {
        (1u128 << self.j).pow(self.k as u32)
    }
}

pub fn cube_quantizer(k: usize, j: u32, grid: DyadicGrid) -> Result<CubeQuantizer> {
    if j > grid.bits() {
        return Err(Error::Resolution { j, bits: grid.bits() });
    }
    Ok(CubeQuantizer { k, j })
}

/// A decoder known on finitely many points, extended by nearest-point
/// lookup (∞-norm, first point on ties) and clipping to `[0,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Extension {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}

impl Extension {
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut best = (f64::INFINITY, 0usize);
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != y.len() {
                return Err(Error::Dimension { expected: p.len(), got: y.len() });
            }
            let d = Norm::Inf.dist(p, y);
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(self.values[best.1].iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }
}

pub fn clip_extend(points: Vec<Vec<f64>>, values: Vec<Vec<f64>>) -> Result<Extension> {
    if points.is_empty() || points.len() != values.len() {
        return Err(Error::param("extension needs a nonempty domain with one value per point"));
    }
    Ok(Extension { points, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive { max_pairs: u64 },
    Sampled { pairs: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityCertificate {
    pub spec: HolderSpec,
    pub certified: bool,
    pub pairs_checked: u64,
    /// `sup ‖g(x)-g(y)‖ / ‖x-y‖^α` over the checked pairs.
    pub max_ratio: f64,
    pub violation: Option<Violation>,
}

const REG_TOL: f64 = 1e-9;

fn domain_points(domain: &Domain) -> Vec<Vec<f64>> {
    match domain {
        Domain::Points(p) => p.clone(),
        Domain::Grid { dim, bits } => {
            let side = (1u64 << bits) + 1;
            let scale = (1u64 << bits) as f64;
            (0..side.pow(*dim as u32))
                .map(|mut c| {
                    (0..*dim)
                        .map(|_| {
                            let v = (c % side) as f64 / scale;
                            c /= side;
                            v
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Check `‖g(x)-g(y)‖_p ≤ L‖x-y‖_p^α` on pairs from `domain`, plus
/// additivity and homogeneity of `g - g(0)` for the linear class.
pub fn verify_regularity<F>(map: F, spec: HolderSpec, domain: &Domain, mode: CheckMode) -> Result<RegularityCertificate>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let (Some(norm), Some(l), Some(alpha)) = (spec.norm(), spec.constant(), spec.exponent()) else {
        return Ok(RegularityCertificate { spec, certified: true, pairs_checked: 0, max_ratio: 0.0, violation: None });
    };
    let (points, pairs): (Vec<Vec<f64>>, Vec<(usize, usize)>) = match mode {
        CheckMode::Exhaustive { max_pairs } => {
            let pts = domain_points(domain);
            let total = pts.len() as u64 * pts.len().saturating_sub(1) as u64 / 2;
            if total > max_pairs {
                return Err(Error::Budget { what: "exhaustive pair check".into(), estimate: total as f64, budget: max_pairs });
            }
            let pairs = (0..pts.len()).flat_map(|i| (i + 1..pts.len()).map(move |j| (i, j))).collect();
            (pts, pairs)
        }
        CheckMode::Sampled { pairs, seed } => {
            let mut pts = Vec::with_capacity(2 * pairs);
            for i in 0..pairs {
                let mut r = rng::stream(seed, i as u64);
                pts.push(sample_point(domain, &mut r));
                pts.push(sample_point(domain, &mut r));
            }
            (pts, (0..pairs).map(|i| (2 * i, 2 * i + 1)).collect())
        }
    };
    let images: Vec<Vec<f64>> = points.par_iter().map(|x| map(x)).collect::<Result<_>>()?;
    let mut max_ratio = 0.0f64;
    let mut violation = None;
    for &(i, j) in &pairs {
        let dx = norm.dist(&points[i], &points[j]);
        let dg = norm.dist(&images[i], &images[j]);
        let rhs = l * dx.powf(alpha);
        if dx > 0.0 {
            max_ratio = max_ratio.max(dg / dx.powf(alpha));
        }
        if dg > rhs * (1.0 + REG_TOL) + REG_TOL && violation.is_none() {
            violation = Some(Violation { x: points[i].clone(), y: points[j].clone(), lhs: dg, rhs });
        }
    }
    if matches!(spec, HolderSpec::Linear { .. }) && violation.is_none() {
        violation = check_affine(&map, &points, &images)?;
    }
    Ok(RegularityCertificate {
        spec,
        certified: violation.is_none(),
        pairs_checked: pairs.len() as u64,
        max_ratio,
        violation,
    })
}

fn check_affine<F>(map: &F, points: &[Vec<f64>], images: &[Vec<f64>]) -> Result<Option<Violation>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let Some(first) = points.first() else { return Ok(None) };
    let origin = map(&vec![0.0; first.len()])?;
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(u, v)| (u - v).abs() <= 1e-9);
    for (x, gx) in points.iter().zip(images).take(64) {
        let half: Vec<f64> = x.iter().map(|v| v / 2.0).collect();
        let g_half = map(&half)?;
        let expect: Vec<f64> = gx.iter().zip(&origin).map(|(g, o)| o + (g - o) / 2.0).collect();
        if !close(&g_half, &expect) {
            return Ok(Some(Violation { x: x.clone(), y: half, lhs: f64::NAN, rhs: f64::NAN }));
        }
        for (y, gy) in points.iter().zip(images).take(64) {
            let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
            if sum.iter().any(|&v| v > 1.0) {
                continue;
            }
            let g_sum = map(&sum)?;
            let expect: Vec<f64> = gx.iter().zip(gy).zip(&origin).map(|((a, b), o)| a + b - o).collect();
            if !close(&g_sum, &expect) {
                return Ok(Some(Violation { x: x.clone(), y: y.clone(), lhs: f64::NAN, rhs: f64::NAN }));
            }
        }
    }
    Ok(None)
}

fn sample_point<R: rand::Rng>(domain: &Domain, r: &mut R) -> Vec<f64> {
    match domain {
        Domain::Grid { dim, bits } => {
            let side = 1u64 << bits;
            (0..*dim).map(|_| r.random_range(0..=side) as f64 / side as f64).collect()
        }
        Domain::Points(p) => p[r.random_range(0..p.len())].clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ErrorMode {
    /// `μ(g∘f(x) ≠ x)`.
    MismatchProb,
    /// `μ(‖x - g∘f(x)‖_p ≥ ε)`.
    ExcessProb { epsilon: f64, norm: Norm },
    /// `(∫ ‖x - g∘f(x)‖_p^p dμ)^{1/p}`.
    MeanLp { p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub value: f64,
    /// 95% half-width; zero when exact.
    pub half_width: f64,
    pub exact: bool,
    pub samples: usize,
}

fn loss(mode: ErrorMode, x: &[f64], z: &[f64]) -> f64 {
    match mode {
        ErrorMode::MismatchProb => (x != z) as u8 as f64,
        ErrorMode::ExcessProb { epsilon, norm } => (norm.dist(x, z) >= epsilon) as u8 as f64,
        ErrorMode::MeanLp { p } => Norm::P(p).dist(x, z).powf(p),
    }
}

/// Error of `codec` under the `n`-marginal of `measure`: exact when the
/// marginal fits in `budget`, otherwise Monte Carlo over `samples` draws.
pub fn measure_error(
    codec: &CodecPair,
    measure: &MeasureSpec,
    grid: DyadicGrid,
    mode: ErrorMode,
    samples: usize,
    seed: u64,
    budget: u64,
) -> Result<ErrorEstimate> {
    if let ErrorMode::MeanLp { p } = mode {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::param(format!("mean-Lp mode needs finite p >= 1, got {p}")));
        }
    }
    let n = codec.n();
    let finish = |mean: f64| match mode {
        ErrorMode::MeanLp { p } => mean.max(0.0).powf(1.0 / p),
        _ => mean,
    };
    match measure.marginal(n, grid, budget) {
        Ok(m) => {
            let mean = (0..m.len())
                .into_par_iter()
                .map(|i| {
                    let x = m.values(i);
                    Ok(m.probs[i] * loss(mode, &x, &codec.roundtrip(&x)?))
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .sum::<f64>();
            Ok(ErrorEstimate { value: finish(mean), half_width: 0.0, exact: true, samples: m.len() })
        }
        Err(Error::Budget { .. }) => {
            let draws = measure.sample_windows(n, samples, seed, grid)?;
            let losses: Vec<f64> = draws
                .par_iter()
                .map(|b| Ok(loss(mode, b.values(), &codec.roundtrip(b.values())?)))
                .collect::<Result<_>>()?;
            let count = losses.len() as f64;
            let mean = losses.iter().sum::<f64>() / count;
            let var = losses.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
            Ok(ErrorEstimate {
                value: finish(mean),
                half_width: 1.96 * (var / count).sqrt(),
                exact: false,
                samples: losses.len(),
            })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantizer_examples() {
        let g = DyadicGrid::new(4).unwrap();
        let q = cube_quantizer(1, 1, g).unwrap();
        assert_eq!(q.apply(&[0.3]).unwrap(), vec![0.25]);
        assert_eq!(cube_quantizer(2, 2, g).unwrap().codebook_size(), 16);
        assert!(cube_quantizer(1, 5, g).is_err());
    }

    #[test]
    fn clip_extension() {
        let e = clip_extend(vec![vec![0.0]], vec![vec![1.2]]).unwrap();
        assert_eq!(e.apply(&[0.7]).unwrap(), vec![1.0]);
        assert!(clip_extend(vec![], vec![]).is_err());
    }

    #[test]
    fn step_function_violates_lipschitz() {
        let spec = HolderSpec::lipschitz(1.0, Norm::Inf).unwrap();
        let step = |x: &[f64]| Ok(vec![if x[0] < 0.5 { 0.0 } else { 1.0 }]);
        let c = verify_regularity(step, spec, &Domain::Grid { dim: 1, bits: 3 }, CheckMode::Exhaustive { max_pairs: 1000 })
            .unwrap();
        assert!(!c.certified);
        assert!(c.violation.is_some());
    }

    #[test]
    fn identity_errors_vanish() {
        let g = DyadicGrid::new(1).unwrap();
        let m = MeasureSpec::uniform_iid(&[0.0, 1.0]);
        let id = CodecPair::identity(3);
        for mode in [
            ErrorMode::MismatchProb,
            ErrorMode::ExcessProb { epsilon: 0.1, norm: Norm::Inf },
            ErrorMode::MeanLp { p: 1.0 },
        ] {
            assert_eq!(measure_error(&id, &m, g, mode, 10, 0, 1000).unwrap().value, 0.0);
        }
    }
}
