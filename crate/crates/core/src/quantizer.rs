//! MMSE (Lloyd-Max) scalar quantizers for a unit-variance Gaussian input.
//!
//! A [`QuantizerSpec`] carries the cell thresholds and reconstruction levels
//! together with the normalized distortion `rho = E[(X - Q(X))^2]` and the
//! AQNM gain `alpha = 1 - rho`. Complex sample streams are quantized per
//! component after scaling each component to unit variance, which is the
//! automatic-gain-control model used by the rate analysis.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gaussian::{self, CellMoments};
use crate::rng::{stream_rng, Stream};

/// Largest bit depth accepted by [`design_lloyd_max`].
pub const MAX_DESIGN_BITS: u32 = 16;

/// Largest bit depth accepted by the tabulated/closed-form rho source.
pub const MAX_FORMULA_BITS: u32 = 64;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// Normalized distortion of the MMSE Gaussian quantizer for 1..=5 bits.
pub const RHO_TABLE: [f64; 5] = [0.3634, 0.1175, 0.03454, 0.009497, 0.002499];

/// ADC resolution: a finite number of bits or an ideal (unquantized) converter.
///
/// Ordering places every finite depth before `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bits {
    Finite(u32),
    Infinite,
}

impl Bits {
    pub fn finite(self) -> Option<u32> {
        match self {
            Bits::Finite(b) => Some(b),
            Bits::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Bits::Infinite)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bits::Finite(b) => write!(f, "{b}"),
            Bits::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" | "∞" => Ok(Bits::Infinite),
            _ => {
                let b: u32 = t
                    .parse()
                    .map_err(|_| Error::invalid("bits", format!("`{s}` is not a bit count or `inf`")))?;
                if b == 0 {
                    return Err(Error::invalid("bits", "must be at least 1"));
                }
                Ok(Bits::Finite(b))
            }
        }
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bits::Finite(b) => s.serialize_u32(*b),
            Bits::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(b) if b >= 1 && b <= u32::MAX as i64 => Ok(Bits::Finite(b as u32)),
            Raw::Int(b) => Err(serde::de::Error::custom(format!("bits must be >= 1, got {b}"))),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// An immutable scalar quantizer for unit-variance input.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec {
    bits: Bits,
    thresholds: Vec<f64>,
    levels: Vec<f64>,
    rho: f64,
    alpha: f64,
}

impl QuantizerSpec {
    /// The ideal converter: identity map, `rho = 0`, `alpha = 1`.
    pub fn infinite() -> Self {
        QuantizerSpec {
            bits: Bits::Infinite,
            thresholds: Vec::new(),
            levels: Vec::new(),
            rho: 0.0,
            alpha: 1.0,
        }
    }

    /// Lloyd-Max design with the default tolerance and iteration budget.
    pub fn lloyd_max(bits: u32) -> Result<Self> {
        design_lloyd_max(bits, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)
    }

    /// Lloyd-Max for finite `bits`, identity for `Infinite`.
    pub fn for_bits(bits: Bits) -> Result<Self> {
        match bits {
            Bits::Finite(b) => Self::lloyd_max(b),
            Bits::Infinite => Ok(Self::infinite()),
        }
    }

    pub fn bits(&self) -> Bits {
        self.bits
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Reconstruction value for a unit-variance scalar. Ties break upward.
    #[inline]
    pub fn quantize_unit(&self, u: f64) -> f64 {
        if self.bits.is_infinite() {
            return u;
        }
        let cell = self.thresholds.partition_point(|&t| t <= u);
        self.levels[cell]
    }

    fn from_levels(bits: u32, levels: Vec<f64>) -> Self {
        let thresholds = midpoints(&levels);
        let rho = distortion(&thresholds, &levels);
        QuantizerSpec {
            bits: Bits::Finite(bits),
            thresholds,
            levels,
            rho,
            alpha: 1.0 - rho,
        }
    }
}

fn midpoints(levels: &[f64]) -> Vec<f64> {
    levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

fn cells(thresholds: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    let k = thresholds.len();
    (0..=k).map(move |i| {
        let lo = if i == 0 { f64::NEG_INFINITY } else { thresholds[i - 1] };
        let hi = if i == k { f64::INFINITY } else { thresholds[i] };
        (lo, hi)
    })
}

/// `E[(X - Q(X))^2]` for X ~ N(0,1), summed cell by cell.
fn distortion(thresholds: &[f64], levels: &[f64]) -> f64 {
    cells(thresholds)
        .zip(levels)
        .map(|((lo, hi), &c)| gaussian::cell_distortion(lo, hi, c))
        .sum()
}

/// Conditional means of the cells delimited by `thresholds`.
fn centroids(thresholds: &[f64]) -> Vec<f64> {
    cells(thresholds)
        .map(|(lo, hi)| gaussian::cell_centroid(lo, hi))
        .collect()
}

/// Force exact odd symmetry, `level_k = -level_{K-1-k}`.
fn symmetrize(levels: &mut [f64]) {
    let n = levels.len();
    for k in 0..n / 2 {
        let v = 0.5 * (levels[n - 1 - k] - levels[k]);
        levels[k] = -v;
        levels[n - 1 - k] = v;
    }
}

/// One Lloyd iteration: nearest-neighbor thresholds, then centroid levels.
fn lloyd_step(levels: &[f64]) -> Vec<f64> {
    let mut next = centroids(&midpoints(levels));
    symmetrize(&mut next);
    next
}

/// Newton direction for the fixed-point residual `level - centroid(midpoints)`.
///
/// Centroid `k` only depends on the thresholds either side of it, so the
/// Jacobian is tridiagonal.
fn newton_direction(levels: &[f64]) -> Vec<f64> {
    let n = levels.len();
    let thresholds = midpoints(levels);
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for (k, (lo, hi)) in cells(&thresholds).enumerate() {
        let m = CellMoments::over(lo, hi);
        let c = gaussian::cell_centroid(lo, hi);
        // dc/dlo = phi(lo)(c - lo)/p, dc/dhi = phi(hi)(hi - c)/p
        let d_lo = if lo.is_finite() {
            gaussian::pdf(lo) * (c - lo) / m.mass
        } else {
            0.0
        };
        let d_hi = if hi.is_finite() {
            gaussian::pdf(hi) * (hi - c) / m.mass
        } else {
            0.0
        };
        sub[k] = -0.5 * d_lo;
        sup[k] = -0.5 * d_hi;
        diag[k] = 1.0 - 0.5 * (d_lo + d_hi);
        rhs[k] = c - levels[k];
    }
    // Thomas algorithm.
    for k in 1..n {
        let w = sub[k] / diag[k - 1];
        diag[k] -= w * sup[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    let mut step = vec![0.0; n];
    step[n - 1] = rhs[n - 1] / diag[n - 1];
    for k in (0..n - 1).rev() {
        step[k] = (rhs[k] - sup[k] * step[k + 1]) / diag[k];
    }
    step
}

/// Damped Newton update: halve the step until the levels stay ordered and
/// the distortion does not rise. `None` if no trial step qualifies.
fn newton_step(levels: &[f64], current: f64) -> Option<(Vec<f64>, f64)> {
    let direction = newton_direction(levels);
    let mut scale = 1.0;
    for _ in 0..12 {
        let mut next: Vec<f64> = levels.iter().zip(&direction).map(|(l, s)| l + scale * s).collect();
        symmetrize(&mut next);
        if next.iter().all(|v| v.is_finite()) && next.windows(2).all(|w| w[0] < w[1]) {
            let d = distortion(&midpoints(&next), &next);
            if d <= current {
                return Some((next, d));
            }
        }
        scale *= 0.5;
    }
    None
}

/// Design the MMSE quantizer with `2^bits` levels for a standard Gaussian.
///
/// Levels start at the Gaussian quantiles of the cell midpoints of an
/// equiprobable partition. Each iteration takes a damped Newton step on
/// the Lloyd-Max conditions, or a plain Lloyd update when no damped step
/// keeps the levels ordered without raising the distortion, until the relative change in distortion, or the largest level update,
/// drops below `tolerance`.
pub fn design_lloyd_max(bits: u32, tolerance: f64, max_iterations: usize) -> Result<QuantizerSpec> {
    if !(1..=MAX_DESIGN_BITS).contains(&bits) {
        return Err(Error::invalid(
            "bits",
            format!("Lloyd-Max design supports 1..={MAX_DESIGN_BITS} bits, got {bits}"),
        ));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::invalid("tolerance", "must be positive and finite"));
    }
    if max_iterations == 0 {
        return Err(Error::invalid("max_iterations", "must be at least 1"));
    }

    let count = 1usize << bits;
    let mut levels: Vec<f64> = (0..count)
        .map(|k| gaussian::quantile((k as f64 + 0.5) / count as f64))
        .collect();
    symmetrize(&mut levels);

    let mut current = distortion(&midpoints(&levels), &levels);
    let mut change = f64::INFINITY;
    for _ in 0..max_iterations {
        let (next_levels, next) = newton_step(&levels, current).unwrap_or_else(|| {
            let l = lloyd_step(&levels);
            let d = distortion(&midpoints(&l), &l);
            (l, d)
        });
        let moved = levels
            .iter()
            .zip(&next_levels)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        change = (current - next).abs() / next;
        levels = next_levels;
        current = next;
        if change < tolerance || moved < tolerance {
            return Ok(QuantizerSpec::from_levels(bits, levels));
        }
    }
    Err(Error::Convergence {
        bits,
        iterations: max_iterations,
        last_change: change,
        last_iterate: Box::new(QuantizerSpec::from_levels(bits, levels)),
    })
}

/// Where to take `rho` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMode {
    /// Tabulated values for b <= 5, `(pi*sqrt(3)/2) * 2^(-2b)` above.
    #[default]
    #[serde(alias = "table")]
    TableThenFormula,
    /// Run [`design_lloyd_max`] with default settings.
    #[serde(alias = "lloyd-max")]
    LloydMax,
}

impl FromStr for RhoMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" | "table_then_formula" => Ok(RhoMode::TableThenFormula),
            "lloyd-max" | "lloyd_max" => Ok(RhoMode::LloydMax),
            _ => Err(Error::invalid(
                "mode",
                format!("expected `table` or `lloyd-max`, got `{s}`"),
            )),
        }
    }
}

/// High-resolution approximation `(pi*sqrt(3)/2) * 2^(-2b)`.
pub fn rho_high_resolution(bits: u32) -> f64 {
    std::f64::consts::PI * 3f64.sqrt() / 2.0 * 2f64.powi(-2 * bits as i32)
}

pub fn rho_of_bits(bits: Bits, mode: RhoMode) -> Result<f64> {
    let b = match bits {
        Bits::Infinite => return Ok(0.0),
        Bits::Finite(0) => return Err(Error::invalid("bits", "must be at least 1")),
        Bits::Finite(b) => b,
    };
    match mode {
        RhoMode::TableThenFormula => {
            if b > MAX_FORMULA_BITS {
                Err(Error::invalid(
                    "bits",
                    format!("closed-form rho supports 1..={MAX_FORMULA_BITS} bits, got {b}"),
                ))
            } else if b as usize <= RHO_TABLE.len() {
                Ok(RHO_TABLE[b as usize - 1])
            } else {
                Ok(rho_high_resolution(b))
            }
        }
        RhoMode::LloydMax => QuantizerSpec::lloyd_max(b).map(|q| q.rho()),
    }
}

/// AQNM gain `1 - rho`.
pub fn alpha_of_bits(bits: Bits, mode: RhoMode) -> Result<f64> {
    rho_of_bits(bits, mode).map(|rho| 1.0 - rho)
}

/// Quantize the real and imaginary parts of each sample independently.
///
/// Each component is divided by `sqrt(input_variance / 2)`, mapped to its
/// cell's reconstruction level and scaled back.
pub fn quantize_stream(samples: &[Complex64], spec: &QuantizerSpec, input_variance: f64) -> Result<Vec<Complex64>> {
    if !(input_variance > 0.0 && input_variance.is_finite()) {
        return Err(Error::invalid("input_variance", "must be positive and finite"));
    }
    if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::invalid("samples", format!("sample {i} is not finite")));
    }
    if spec.bits().is_infinite() {
        return Ok(samples.to_vec());
    }
    let scale = (input_variance / 2.0).sqrt();
    Ok(samples
        .iter()
        .map(|z| {
            Complex64::new(
                spec.quantize_unit(z.re / scale) * scale,
                spec.quantize_unit(z.im / scale) * scale,
            )
        })
        .collect())
}

/// Empirical check of the additive quantization noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AqnmStatistics {
    /// `sum |y - Q(y)|^2 / sum |y|^2`.
    pub empirical_rho: f64,
    /// Delta-method standard error of `empirical_rho`.
    pub rho_stderr: f64,
    /// `|sum n_q conj(y)| / sqrt(sum |n_q|^2 * sum |y|^2)` with `n_q = Q(y) - alpha*y`.
    pub correlation_nq_y: f64,
    pub num_samples: usize,
}

#[derive(Default, Clone, Copy)]
struct AqnmSums {
    err: f64,
    power: f64,
    err_sq: f64,
    err_power: f64,
    power_sq: f64,
    cross: Complex64,
    noise: f64,
}

impl AqnmSums {
    fn merge(mut self, o: AqnmSums) -> Self {
        self.err += o.err;
        self.power += o.power;
        self.err_sq += o.err_sq;
        self.err_power += o.err_power;
        self.power_sq += o.power_sq;
        self.cross += o.cross;
        self.noise += o.noise;
        self
    }
}

const AQNM_CHUNK: usize = 1 << 16;

/// Draw `num_samples` standard complex Gaussians, quantize them and measure
/// the distortion and the correlation between quantization noise and input.
pub fn measure_aqnm_statistics(spec: &QuantizerSpec, num_samples: usize, seed: u64) -> Result<AqnmStatistics> {
    if num_samples < 10_000 {
        return Err(Error::invalid(
            "num_samples",
            format!("need at least 10^4, got {num_samples}"),
        ));
    }
    let alpha = spec.alpha();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let chunks = num_samples.div_ceil(AQNM_CHUNK);

    let partial: Vec<AqnmSums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, Stream::Aqnm, c as u64);
            let len = AQNM_CHUNK.min(num_samples - c * AQNM_CHUNK);
            let mut s = AqnmSums::default();
            for _ in 0..len {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let y = Complex64::new(re * scale, im * scale);
                let q = Complex64::new(
                    spec.quantize_unit(y.re / scale) * scale,
                    spec.quantize_unit(y.im / scale) * scale,
                );
                let d = (y - q).norm_sqr();
                let p = y.norm_sqr();
                let nq = q - alpha * y;
                s.err += d;
                s.power += p;
                s.err_sq += d * d;
                s.err_power += d * p;
                s.power_sq += p * p;
                s.cross += nq * y.conj();
                s.noise += nq.norm_sqr();
            }
            s
        })
        .collect();
    let s = partial.into_iter().fold(AqnmSums::default(), AqnmSums::merge);

    let n = num_samples as f64;
    let rho = s.err / s.power;
    // Ratio estimator: residual e_i = d_i - rho * p_i.
    let resid_var = (s.err_sq - 2.0 * rho * s.err_power + rho * rho * s.power_sq) / n;
    let rho_stderr = resid_var.max(0.0).sqrt() / (s.power / n) / n.sqrt();
    let denom = (s.noise * s.power).sqrt();
    let correlation = if denom > 0.0 { s.cross.norm() / denom } else { 0.0 };

    Ok(AqnmStatistics {
        empirical_rho: rho,
        rho_stderr,
        correlation_nq_y: correlation,
        num_samples,
    })
}
