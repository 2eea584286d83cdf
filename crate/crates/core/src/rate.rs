//! Uplink rate of MRC under the additive quantization noise model.
//!
//! For a fixed channel `G` the post-combining noise-plus-interference power
//! of user `n` is
//!
//! ```text
//! I_G = p_u a^2 sum_{i != n} |g_n^H g_i|^2 + a^2 |g_n|^2
//!       + a (1 - a) g_n^H diag(p_u G G^H + I) g_n
//! ```
//!
//! and the ergodic rate is `E[log2(1 + p_u a^2 |g_n|^4 / I_G)]` over the
//! fast fading. This module estimates that expectation by Monte Carlo and
//! evaluates the closed-form approximation together with its limits in the
//! ideal-ADC, high-power and power-scaled regimes.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{check_betas, compose_channel, fast_fading, CMatrix};
use crate::error::{Error, Result};
use crate::quantizer::Bits;
use crate::rng::{stream_rng, Stream};

/// Smallest trial count accepted by the Monte Carlo estimators.
pub const MIN_TRIALS: usize = 100;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
    pub trials: usize,
}

impl MonteCarloEstimate {
    /// Summarize samples, summing in slice order so the result does not
    /// depend on how the samples were produced.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n >= 2, "need at least two samples");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        MonteCarloEstimate {
            mean,
            stderr: sd / (n as f64).sqrt(),
            trials: n,
        }
    }

    /// `(mean - reference) / stderr`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.stderr
    }
}

/// Monte Carlo estimates of per-user and sum ergodic rates.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRates {
    pub per_user: Vec<MonteCarloEstimate>,
    pub sum: MonteCarloEstimate,
}

/// Exact and approximate rates for one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub per_user_mc: Option<Vec<MonteCarloEstimate>>,
    pub per_user_approx: Vec<f64>,
    pub sum_rate_mc: Option<MonteCarloEstimate>,
    pub sum_rate_approx: f64,
    /// Bits per Joule; absent for ideal ADCs.
    pub energy_efficiency: Option<f64>,
}

fn check_power(p_u: f64) -> Result<()> {
    if p_u > 0.0 && p_u.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("p_u", format!("must be positive and finite, got {p_u}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("must lie in (0, 1], got {alpha}")))
    }
}

fn check_user(n: usize, users: usize) -> Result<()> {
    if n < users {
        Ok(())
    } else {
        Err(Error::invalid(
            "n",
            format!("user index {n} out of range for {users} users"),
        ))
    }
}

/// Per-user channel statistics entering the MRC SINR, independent of alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct MrcTerms {
    p_u: f64,
    /// `|g_n|^2`.
    pub norm_sq: Vec<f64>,
    /// `sum_{i != n} |g_n^H g_i|^2`.
    pub cross: Vec<f64>,
    /// `g_n^H diag(p_u G G^H + I) g_n = sum_m |g_mn|^2 (1 + p_u sum_i |g_mi|^2)`.
    pub diag_weighted: Vec<f64>,
}

impl MrcTerms {
    /// Column inner products plus one pass over the rows; never forms the
    /// `M x M` matrix `G G^H`.
    pub fn new(g: &CMatrix, p_u: f64) -> Result<Self> {
        check_power(p_u)?;
        let (m, n) = g.shape();
        let mut norm_sq = vec![0.0; n];
        let mut cross = vec![0.0; n];
        for i in 0..n {
            let gi = g.column(i);
            norm_sq[i] = gi.iter().map(|v| v.norm_sqr()).sum();
            for j in i + 1..n {
                let gj = g.column(j);
                let ip: Complex64 = gi.iter().zip(gj.iter()).map(|(a, b)| a.conj() * b).sum();
                let p = ip.norm_sqr();
                cross[i] += p;
                cross[j] += p;
            }
        }
        let mut diag_weighted = vec![0.0; n];
        let mut row_power = vec![0.0; m];
        for j in 0..n {
            for (r, v) in row_power.iter_mut().zip(g.column(j).iter()) {
                *r += v.norm_sqr();
            }
        }
        for (j, acc) in diag_weighted.iter_mut().enumerate() {
            *acc = g
                .column(j)
                .iter()
                .zip(&row_power)
                .map(|(v, r)| v.norm_sqr() * (1.0 + p_u * r))
                .sum();
        }
        Ok(MrcTerms {
            p_u,
            norm_sq,
            cross,
            diag_weighted,
        })
    }

    pub fn users(&self) -> usize {
        self.norm_sq.len()
    }

    pub fn interference_variance(&self, n: usize, alpha: f64) -> f64 {
        let a2 = alpha * alpha;
        self.p_u * a2 * self.cross[n] + a2 * self.norm_sq[n] + alpha * (1.0 - alpha) * self.diag_weighted[n]
    }

    pub fn rate(&self, n: usize, alpha: f64) -> f64 {
        let s = self.norm_sq[n];
        if s == 0.0 {
            return 0.0;
        }
        let signal = self.p_u * alpha * alpha * s * s;
        (1.0 + signal / self.interference_variance(n, alpha)).log2()
    }

    pub fn rates(&self, alpha: f64) -> Vec<f64> {
        (0..self.users()).map(|n| self.rate(n, alpha)).collect()
    }
}

/// Noise-plus-interference power seen by user `n` after MRC on channel `g`.
pub fn interference_variance(g: &CMatrix, n: usize, p_u: f64, alpha: f64) -> Result<f64> {
    check_user(n, g.ncols())?;
    check_alpha(alpha)?;
    Ok(MrcTerms::new(g, p_u)?.interference_variance(n, alpha))
}

/// `log2(1 + p_u a^2 |g_n|^4 / I_G)`; zero when column `n` is zero.
pub fn instantaneous_rate(g: &CMatrix, n: usize, p_u: f64, alpha: f64) -> Result<f64> {
    check_user(n, g.ncols())?;
    check_alpha(alpha)?;
    Ok(MrcTerms::new(g, p_u)?.rate(n, alpha))
}

fn check_mc(betas: &[f64], m: usize, p_u: f64, alphas: &[f64], trials: usize) -> Result<()> {
    check_betas(betas)?;
    check_power(p_u)?;
    if m == 0 {
        return Err(Error::invalid("M", "need at least one antenna"));
    }
    if alphas.is_empty() {
        return Err(Error::invalid("alpha", "need at least one value"));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    if trials < MIN_TRIALS {
        return Err(Error::invalid(
            "trials",
            format!("need at least {MIN_TRIALS}, got {trials}"),
        ));
    }
    Ok(())
}

/// Monte Carlo ergodic rates for several ADC gains on shared realizations.
///
/// Trial `t` draws its fast fading from the stream `(seed, t)`, so results
/// are identical whatever the thread count, and each entry of the output
/// equals what [`ergodic_rate_mc`] returns for that alpha alone.
pub fn ergodic_rate_mc_multi(
    betas: &[f64],
    m: usize,
    p_u: f64,
    alphas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<MonteCarloRates>> {
    check_mc(betas, m, p_u, alphas, trials)?;
    let n = betas.len();
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, Stream::Fading, t as u64);
            let h = fast_fading(&mut rng, m, n);
            let ch = compose_channel(h, betas).expect("validated attenuations");
            let terms = MrcTerms::new(ch.g(), p_u).expect("validated power");
            alphas.iter().flat_map(|&a| terms.rates(a)).collect()
        })
        .collect();

    Ok((0..alphas.len())
        .map(|k| {
            let per_user = (0..n)
                .map(|u| {
                    let xs: Vec<f64> = per_trial.iter().map(|row| row[k * n + u]).collect();
                    MonteCarloEstimate::from_samples(&xs)
                })
                .collect();
            let sums: Vec<f64> = per_trial
                .iter()
                .map(|row| row[k * n..(k + 1) * n].iter().sum())
                .collect();
            MonteCarloRates {
                per_user,
                sum: MonteCarloEstimate::from_samples(&sums),
            }
        })
        .collect())
}

/// Monte Carlo estimate of the ergodic rates for fixed attenuations.
pub fn ergodic_rate_mc(
    betas: &[f64],
    m: usize,
    p_u: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloRates> {
    let mut out = ergodic_rate_mc_multi(betas, m, p_u, &[alpha], trials, seed)?;
    Ok(out.remove(0))
}

fn check_closed_form(betas: &[f64], n: usize, m: usize) -> Result<()> {
    check_betas(betas)?;
    check_user(n, betas.len())?;
    if m == 0 {
        return Err(Error::invalid("M", "need at least one antenna"));
    }
    Ok(())
}

/// Closed-form approximation of user `n`'s ergodic rate:
///
/// ```text
/// log2(1 + p_u a beta_n (M + 1) / I),
/// I = p_u a sum_{i != n} beta_i + p_u (1 - a) (sum_i beta_i + beta_n) + 1
/// ```
pub fn approx_rate(betas: &[f64], n: usize, m: usize, p_u: f64, alpha: f64) -> Result<f64> {
    check_closed_form(betas, n, m)?;
    check_power(p_u)?;
    check_alpha(alpha)?;
    let total: f64 = betas.iter().sum();
    let others = total - betas[n];
    let interference = p_u * alpha * others + p_u * (1.0 - alpha) * (total + betas[n]) + 1.0;
    Ok((1.0 + p_u * alpha * betas[n] * (m as f64 + 1.0) / interference).log2())
}

/// Sum of [`approx_rate`] over all users.
pub fn approx_sum_rate(betas: &[f64], m: usize, p_u: f64, alpha: f64) -> Result<f64> {
    (0..betas.len()).map(|n| approx_rate(betas, n, m, p_u, alpha)).sum()
}

/// Closed-form rates for every user plus, when `mc = Some((trials, seed))`,
/// the matching Monte Carlo estimates. Energy efficiency is left empty.
pub fn rate_point(betas: &[f64], m: usize, p_u: f64, alpha: f64, mc: Option<(usize, u64)>) -> Result<RatePoint> {
    let per_user_approx: Vec<f64> = (0..betas.len())
        .map(|n| approx_rate(betas, n, m, p_u, alpha))
        .collect::<Result<_>>()?;
    let mc = mc
        .map(|(trials, seed)| ergodic_rate_mc(betas, m, p_u, alpha, trials, seed))
        .transpose()?;
    Ok(RatePoint {
        sum_rate_approx: per_user_approx.iter().sum(),
        per_user_approx,
        sum_rate_mc: mc.as_ref().map(|r| r.sum),
        per_user_mc: mc.map(|r| r.per_user),
        energy_efficiency: None,
    })
}

/// Ideal-ADC form `log2(1 + p_u beta_n (M + 1) / (p_u sum_{i != n} beta_i + 1))`.
pub fn asymptotic_rate_infinite_bits(betas: &[f64], n: usize, m: usize, p_u: f64) -> Result<f64> {
    check_closed_form(betas, n, m)?;
    check_power(p_u)?;
    let others: f64 = betas.iter().sum::<f64>() - betas[n];
    Ok((1.0 + p_u * betas[n] * (m as f64 + 1.0) / (p_u * others + 1.0)).log2())
}

/// High-power ceiling `log2(1 + a beta_n (M + 1) / (sum_{i != n} beta_i + 2 (1 - a) beta_n))`.
///
/// A single user with an ideal ADC has no ceiling; that case returns
/// `f64::INFINITY` rather than an error.
pub fn asymptotic_rate_infinite_power(betas: &[f64], n: usize, m: usize, alpha: f64) -> Result<f64> {
    check_closed_form(betas, n, m)?;
    check_alpha(alpha)?;
    let others: f64 = betas.iter().sum::<f64>() - betas[n];
    let denom = others + 2.0 * (1.0 - alpha) * betas[n];
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 + alpha * betas[n] * (m as f64 + 1.0) / denom).log2())
}

/// Large-array limit `log2(1 + a beta_n E_u)` under `p_u = E_u / M`.
pub fn power_scaled_limit(beta_n: f64, e_u: f64, alpha: f64) -> Result<f64> {
    if !(beta_n > 0.0 && beta_n.is_finite()) {
        return Err(Error::invalid("beta_n", "must be positive and finite"));
    }
    if !(e_u > 0.0 && e_u.is_finite()) {
        return Err(Error::invalid("E_u", "must be positive and finite"));
    }
    check_alpha(alpha)?;
    Ok((1.0 + alpha * beta_n * e_u).log2())
}

/// Receiver power `c0 M 2^b + c1` in Watt.
pub fn receiver_power(m: usize, bits: Bits, c0: f64, c1: f64) -> Result<f64> {
    let b = match bits {
        Bits::Finite(b) => b,
        Bits::Infinite => {
            return Err(Error::invalid(
                "bits",
                "the ADC power model c0*M*2^b + c1 diverges for an ideal converter",
            ))
        }
    };
    if b > 1023 {
        return Err(Error::invalid("bits", "2^b overflows"));
    }
    if !(c0 >= 0.0 && c1 >= 0.0 && c0 + c1 > 0.0) {
        return Err(Error::invalid(
            "c0/c1",
            "power constants must be non-negative and not both zero",
        ));
    }
    Ok(c0 * (m as f64 * 2f64.powi(b as i32)) + c1)
}

/// Energy efficiency `B R / P` in bits per Joule.
pub fn energy_efficiency(sum_rate: f64, bandwidth: f64, m: usize, bits: Bits, c0: f64, c1: f64) -> Result<f64> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::invalid("bandwidth", "must be positive and finite"));
    }
    if !(sum_rate >= 0.0 && sum_rate.is_finite()) {
        return Err(Error::invalid("sum_rate", "must be non-negative and finite"));
    }
    Ok(bandwidth * sum_rate / receiver_power(m, bits, c0, c1)?)
}
