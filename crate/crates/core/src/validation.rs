//! Statistical self-checks: channel moment identities and the additive
//! quantization noise model.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{compose_channel, fast_fading};
use crate::error::{Error, Result};
use crate::quantizer::{measure_aqnm_statistics, QuantizerSpec};
use crate::rate::{MonteCarloEstimate, MIN_TRIALS};
use crate::rng::{stream_rng, Stream};

pub const DEFAULT_VALIDATION_TRIALS: usize = 10_000;
pub const DEFAULT_AQNM_SAMPLES: usize = 1_000_000;
/// Below this many trials `validate` warns that the checks have little power.
pub const LOW_POWER_TRIALS: usize = 1_000;
pub const Z_LIMIT: f64 = 3.0;
pub const MOMENT_ANTENNAS: [usize; 2] = [8, 64];
const MOMENT_USERS: usize = 4;
const MOMENT_POWER: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub name: &'static str,
    pub m: usize,
    pub estimate: MonteCarloEstimate,
    pub expected: f64,
}

impl MomentCheck {
    pub fn z(&self) -> f64 {
        self.estimate.z_score(self.expected)
    }

    pub fn passed(&self) -> bool {
        self.z().abs() < Z_LIMIT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AqnmCheck {
    pub bits: u32,
    pub rho: f64,
    pub empirical_rho: f64,
    pub rho_stderr: f64,
    pub correlation: f64,
    pub num_samples: usize,
}

impl AqnmCheck {
    pub fn relative_error(&self) -> f64 {
        (self.empirical_rho - self.rho).abs() / self.rho
    }

    pub fn correlation_limit(&self) -> f64 {
        Z_LIMIT / (self.num_samples as f64).sqrt()
    }

    pub fn passed(&self) -> bool {
        self.relative_error() < 0.01 && self.correlation < self.correlation_limit()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub moments: Vec<MomentCheck>,
    pub aqnm: Vec<AqnmCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.moments.iter().all(MomentCheck::passed) && self.aqnm.iter().all(AqnmCheck::passed)
    }

    /// One line per check.
    pub fn lines(&self) -> Vec<String> {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut out: Vec<String> = self
            .moments
            .iter()
            .map(|c| {
                format!(
                    "{} moment {:<22} M={:<3} mc={:.6e} expected={:.6e} z={:+.3}",
                    verdict(c.passed()),
                    c.name,
                    c.m,
                    c.estimate.mean,
                    c.expected,
                    c.z()
                )
            })
            .collect();
        out.extend(self.aqnm.iter().map(|c| {
            format!(
                "{} aqnm   b={} rho={:.6} empirical={:.6} rel_err={:.2e} |corr|={:.2e} limit={:.2e}",
                verdict(c.passed()),
                c.bits,
                c.rho,
                c.empirical_rho,
                c.relative_error(),
                c.correlation,
                c.correlation_limit()
            )
        }));
        out
    }
}

/// Attenuations drawn log-uniformly over two decades.
pub fn random_betas(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Validation, index);
    (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..0.0))).collect()
}

/// Per-realization samples whose means are the five moment identities for
/// user 0 (and user 1 as the interferer).
fn moment_samples(g: &crate::channel::CMatrix, beta0: f64, m: usize, p: f64) -> [f64; 5] {
    let g0 = g.column(0);
    let g1 = g.column(1);
    let norm_sq: f64 = g0.iter().map(|v| v.norm_sqr()).sum();
    let cross = g0.dotc(&g1).norm_sqr();
    let weighted: f64 = (0..m)
        .map(|r| {
            let row: f64 = g.row(r).iter().map(|v| v.norm_sqr()).sum();
            g0[r].norm_sqr() * (1.0 + p * row)
        })
        .sum();
    let dev = norm_sq - beta0 * m as f64;
    [norm_sq, dev * dev, norm_sq * norm_sq, cross, weighted]
}

/// Check the channel moment identities at each `M` in [`MOMENT_ANTENNAS`].
pub fn moment_checks(trials: usize, seed: u64) -> Result<Vec<MomentCheck>> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(
            "trials",
            format!("need at least {MIN_TRIALS}, got {trials}"),
        ));
    }
    let mut checks = Vec::new();
    for &m in &MOMENT_ANTENNAS {
        let betas = random_betas(seed, m as u64, MOMENT_USERS);
        let samples: Vec<[f64; 5]> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(seed, Stream::Validation, ((m as u64) << 32) | t as u64);
                let ch = compose_channel(fast_fading(&mut rng, m, MOMENT_USERS), &betas)?;
                Ok(moment_samples(ch.g(), betas[0], m, MOMENT_POWER))
            })
            .collect::<Result<_>>()?;

        let (b0, b1, mf) = (betas[0], betas[1], m as f64);
        let total: f64 = betas.iter().sum();
        let expected = [
            ("E|g|^2", b0 * mf),
            ("Var|g|^2", b0 * b0 * mf),
            ("E|g|^4", b0 * b0 * (mf * mf + mf)),
            ("E|g_n^H g_i|^2", b0 * b1 * mf),
            (
                "E g^H diag(pGG^H+I) g",
                mf * (b0 + MOMENT_POWER * b0 * total + MOMENT_POWER * b0 * b0),
            ),
        ];
        for (k, (name, value)) in expected.into_iter().enumerate() {
            let column: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            checks.push(MomentCheck {
                name,
                m,
                estimate: MonteCarloEstimate::from_samples(&column),
                expected: value,
            });
        }
    }
    Ok(checks)
}

/// Quantize Gaussian samples with the designed 1, 2 and 3 bit quantizers.
pub fn aqnm_checks(num_samples: usize, seed: u64) -> Result<Vec<AqnmCheck>> {
    (1..=3)
        .map(|b| {
            let spec = QuantizerSpec::lloyd_max(b)?;
            let s = measure_aqnm_statistics(&spec, num_samples, seed.wrapping_add(b as u64))?;
            Ok(AqnmCheck {
                bits: b,
                rho: spec.rho(),
                empirical_rho: s.empirical_rho,
                rho_stderr: s.rho_stderr,
                correlation: s.correlation_nq_y,
                num_samples: s.num_samples,
            })
        })
        .collect()
}

pub fn run_validation(trials: usize, aqnm_samples: usize, seed: u64) -> Result<ValidationReport> {
    Ok(ValidationReport {
        moments: moment_checks(trials, seed)?,
        aqnm: aqnm_checks(aqnm_samples, seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_betas_in_range_and_seeded() {
        let b = random_betas(3, 8, 50);
        assert!(b.iter().all(|&v| (0.01..=1.0).contains(&v)));
        assert_eq!(b, random_betas(3, 8, 50));
        assert_ne!(b, random_betas(4, 8, 50));
    }

    #[test]
    fn rejects_few_trials() {
        assert!(moment_checks(50, 1).unwrap_err().is_validation());
    }

    #[test]
    fn small_run_reports_every_check() {
        let r = run_validation(200, 10_000, 9).unwrap();
        assert_eq!(r.moments.len(), 10);
        assert_eq!(r.aqnm.len(), 3);
        assert_eq!(r.lines().len(), 13);
    }
}
