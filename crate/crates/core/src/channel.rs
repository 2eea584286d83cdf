//! User drops, large-scale fading and Rayleigh fast-fading channels.
//!
//! Users are dropped uniformly over a flat-top hexagonal cell centred on the
//! base station, outside an exclusion disk of radius `r_h`. Each drop fixes
//! the large-scale attenuation `beta = z / (r / r_h)^v` with log-normal
//! shadowing `z = 10^(sigma_db * xi / 10)`. Fast fading is i.i.d. CN(0, 1)
//! and the composed channel is `G = H * diag(beta)^(1/2)`.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig10;
use crate::quantizer::QuantizerSpec;
use crate::rng::{stream_rng, Stream};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellModel {
    /// Hexagon circumradius, meters.
    pub cell_radius: f64,
    /// Radius `r_h` of the user-free disk around the base station, meters.
    pub exclusion_radius: f64,
    pub pathloss_exponent: f64,
    /// Shadowing standard deviation in dB.
    pub shadow_std_db: f64,
}

impl Default for CellModel {
    fn default() -> Self {
        CellModel {
            cell_radius: 1000.0,
            exclusion_radius: 100.0,
            pathloss_exponent: 3.8,
            shadow_std_db: 8.0,
        }
    }
}

impl CellModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_radius.is_finite() && self.exclusion_radius > 0.0 && self.exclusion_radius < self.cell_radius) {
            return Err(Error::invalid("cell", "need 0 < exclusion_radius < cell_radius"));
        }
        // The inscribed circle must leave room outside the exclusion disk.
        if self.exclusion_radius >= self.cell_radius * SQRT_3 / 2.0 {
            return Err(Error::invalid(
                "cell",
                "exclusion disk covers the hexagon's inscribed circle",
            ));
        }
        if !(self.pathloss_exponent > 2.0 && self.pathloss_exponent.is_finite()) {
            return Err(Error::invalid("cell", "pathloss_exponent must exceed 2"));
        }
        if !(self.shadow_std_db >= 0.0 && self.shadow_std_db.is_finite()) {
            return Err(Error::invalid("cell", "shadow_std_db must be non-negative"));
        }
        Ok(())
    }

    /// Flat-top hexagon membership via its three pairs of parallel edges.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let r = self.cell_radius;
        y.abs() <= r * SQRT_3 / 2.0 && SQRT_3 * x.abs() + y.abs() <= SQRT_3 * r
    }

    /// `beta = z / (r / r_h)^v`.
    pub fn attenuation(&self, distance: f64, shadow: f64) -> f64 {
        shadow / (distance / self.exclusion_radius).powf(self.pathloss_exponent)
    }
}

/// Large-scale state of one user, frozen for the lifetime of a drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserDrop {
    pub x: f64,
    pub y: f64,
    /// Distance to the base station, meters.
    pub distance: f64,
    /// Linear shadowing factor.
    pub shadow: f64,
    pub beta: f64,
}

pub fn drop_users(cell: &CellModel, num_users: usize, seed: u64) -> Result<Vec<UserDrop>> {
    cell.validate()?;
    if num_users == 0 {
        return Err(Error::invalid("num_users", "must be at least 1"));
    }
    let mut rng = stream_rng(seed, Stream::Drop, 0);
    let r = cell.cell_radius;
    let half_height = r * SQRT_3 / 2.0;
    let mut users = Vec::with_capacity(num_users);
    while users.len() < num_users {
        let x = rng.random_range(-r..=r);
        let y = rng.random_range(-half_height..=half_height);
        let distance = x.hypot(y);
        if !cell.contains(x, y) || distance < cell.exclusion_radius {
            continue;
        }
        let xi: f64 = StandardNormal.sample(&mut rng);
        let shadow = 10f64.powf(cell.shadow_std_db * xi / 10.0);
        users.push(UserDrop {
            x,
            y,
            distance,
            shadow,
            beta: cell.attenuation(distance, shadow),
        });
    }
    Ok(users)
}

pub fn betas_of(users: &[UserDrop]) -> Vec<f64> {
    users.iter().map(|u| u.beta).collect()
}

/// CSV with columns `user_index,r_n_m,z_n,beta_n`.
pub fn drops_to_csv(users: &[UserDrop]) -> String {
    let mut out = String::from("user_index,r_n_m,z_n,beta_n\n");
    for (i, u) in users.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i, sig10(u.distance), sig10(u.shadow), sig10(u.beta));
    }
    out
}

pub fn write_drops_csv(users: &[UserDrop], mut w: impl Write) -> std::io::Result<()> {
    w.write_all(drops_to_csv(users).as_bytes())
}

/// One CN(0, 1) sample: independent N(0, 1/2) real and imaginary parts.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `m x n` matrix of i.i.d. CN(0, 1) entries, filled column by column.
pub fn fast_fading<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> CMatrix {
    let data: Vec<Complex64> = (0..m * n).map(|_| complex_normal(rng)).collect();
    CMatrix::from_vec(m, n, data)
}

pub fn sample_fast_fading(m: usize, n: usize, seed: u64) -> Result<CMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("dimensions", "M and N must be at least 1"));
    }
    Ok(fast_fading(&mut stream_rng(seed, Stream::Fading, 0), m, n))
}

/// Fast fading, attenuations and the composed channel they produce.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: CMatrix,
    betas: Vec<f64>,
    g: CMatrix,
}

impl ChannelRealization {
    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn g(&self) -> &CMatrix {
        &self.g
    }

    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }
}

pub(crate) fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::invalid("betas", "need at least one user"));
    }
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        return Err(Error::invalid(
            "betas",
            format!("attenuations must be positive and finite, got {b}"),
        ));
    }
    Ok(())
}

/// Scale column `n` of `h` by `sqrt(beta_n)`.
pub fn compose_channel(h: CMatrix, betas: &[f64]) -> Result<ChannelRealization> {
    check_betas(betas)?;
    if h.ncols() != betas.len() {
        return Err(Error::invalid(
            "betas",
            format!("{} attenuations for a channel with {} users", betas.len(), h.ncols()),
        ));
    }
    let mut g = h.clone();
    for (mut col, &b) in g.column_iter_mut().zip(betas) {
        col *= Complex64::from(b.sqrt());
    }
    Ok(ChannelRealization {
        h,
        betas: betas.to_vec(),
        g,
    })
}

/// One use of the quantized uplink for a fixed channel.
#[derive(Debug, Clone)]
pub struct LinkSample {
    /// Transmitted symbols, unit variance.
    pub x: CVector,
    /// Receiver noise, CN(0, I).
    pub noise: CVector,
    /// `sqrt(p_u) G x + noise`.
    pub y: CVector,
    /// Per-antenna quantizer output.
    pub y_q: CVector,
    /// `y_q - alpha y`.
    pub n_q: CVector,
    /// MRC output `G^H y_q`.
    pub r: CVector,
}

/// Draw symbols and noise, quantize each antenna with its gain control set
/// to that antenna's received variance `p_u * sum_i |g_mi|^2 + 1`, and
/// apply MRC.
pub fn simulate_link<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    p_u: f64,
    quantizer: &QuantizerSpec,
    rng: &mut R,
) -> Result<LinkSample> {
    if !(p_u > 0.0 && p_u.is_finite()) {
        return Err(Error::invalid("p_u", "must be positive and finite"));
    }
    let g = channel.g();
    let (m, n) = g.shape();
    let x = CVector::from_fn(n, |_, _| complex_normal(rng));
    let noise = CVector::from_fn(m, |_, _| complex_normal(rng));
    let y = g * &x * Complex64::from(p_u.sqrt()) + &noise;

    let scale: Vec<f64> = g
        .row_iter()
        .map(|row| ((p_u * row.iter().map(|v| v.norm_sqr()).sum::<f64>() + 1.0) / 2.0).sqrt())
        .collect();
    let y_q = if quantizer.bits().is_infinite() {
        y.clone()
    } else {
        CVector::from_fn(m, |i, _| {
            let s = scale[i];
            Complex64::new(
                quantizer.quantize_unit(y[i].re / s) * s,
                quantizer.quantize_unit(y[i].im / s) * s,
            )
        })
    };
    let n_q = &y_q - &y * Complex64::from(quantizer.alpha());
    let r = g.adjoint() * &y_q;
    Ok(LinkSample {
        x,
        noise,
        y,
        y_q,
        n_q,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn beta_formula_examples() {
        let cell = CellModel::default();
        assert_eq!(cell.attenuation(100.0, 1.0), 1.0);
        // 2^-3.8 = 0.0717936471873147
        assert_relative_eq!(
            cell.attenuation(200.0, 1.0),
            0.071_793_647_187_314_7,
            max_relative = 1e-14
        );
        assert!((cell.attenuation(200.0, 1.0) - 0.07179).abs() < 1e-5);
    }

    #[test]
    fn drops_respect_geometry_and_formula() {
        let cell = CellModel::default();
        let users = drop_users(&cell, 2000, 5).unwrap();
        for u in &users {
            assert!(cell.contains(u.x, u.y));
            assert!(u.distance >= cell.exclusion_radius && u.distance <= cell.cell_radius);
            assert_eq!(u.beta, u.shadow / (u.distance / 100.0).powf(3.8));
        }
    }

    #[test]
    fn drops_are_deterministic() {
        let cell = CellModel::default();
        assert_eq!(drop_users(&cell, 10, 42).unwrap(), drop_users(&cell, 10, 42).unwrap());
        assert_ne!(drop_users(&cell, 10, 42).unwrap(), drop_users(&cell, 10, 43).unwrap());
    }

    #[test]
    fn zero_shadowing_gives_unit_shadow() {
        let cell = CellModel {
            shadow_std_db: 0.0,
            ..CellModel::default()
        };
        assert!(drop_users(&cell, 50, 1).unwrap().iter().all(|u| u.shadow == 1.0));
    }

    #[test]
    fn drop_validation() {
        let cell = CellModel::default();
        assert!(drop_users(&cell, 0, 1).is_err());
        let bad = CellModel {
            exclusion_radius: 2000.0,
            ..cell
        };
        assert!(drop_users(&bad, 3, 1).is_err());
        let bad = CellModel {
            pathloss_exponent: 2.0,
            ..cell
        };
        assert!(drop_users(&bad, 3, 1).is_err());
    }

    #[test]
    fn drops_csv_layout() {
        let users = drop_users(&CellModel::default(), 3, 1).unwrap();
        let csv = drops_to_csv(&users);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "user_index,r_n_m,z_n,beta_n");
        assert_eq!(lines.len(), 4);
        let beta: f64 = lines[2].split(',').nth(3).unwrap().parse().unwrap();
        assert_relative_eq!(beta, users[1].beta, max_relative = 1e-9);
    }

    #[test]
    fn fast_fading_moments() {
        let h = sample_fast_fading(1000, 1000, 17).unwrap();
        let n = (h.len()) as f64;
        let mean: Complex64 = h.iter().sum::<Complex64>() / n;
        let p2 = h.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
        let p4 = h.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() / n;
        assert!(mean.norm() < 0.005);
        assert!((p2 - 1.0).abs() < 0.005);
        assert!((p4 - 2.0).abs() < 0.02);
        assert!(sample_fast_fading(0, 3, 1).is_err());
    }

    #[test]
    fn compose_unit_betas_is_identity() {
        let h = sample_fast_fading(4, 3, 1).unwrap();
        let ch = compose_channel(h.clone(), &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(ch.g(), &h);
        assert!(compose_channel(h.clone(), &[1.0, 1.0]).is_err());
        assert!(compose_channel(h, &[1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn link_sample_identities() {
        let h = sample_fast_fading(16, 3, 2).unwrap();
        let ch = compose_channel(h, &[0.5, 1.0, 2.0]).unwrap();
        let q = QuantizerSpec::lloyd_max(2).unwrap();
        let mut rng = stream_rng(1, Stream::Link, 0);
        let s = simulate_link(&ch, 3.0, &q, &mut rng).unwrap();
        let y = ch.g() * &s.x * Complex64::from(3f64.sqrt()) + &s.noise;
        assert!((y - &s.y).norm() < 1e-12);
        let yq = &s.y * Complex64::from(q.alpha()) + &s.n_q;
        assert!((yq - &s.y_q).norm() < 1e-12);
        assert!((ch.g().adjoint() * &s.y_q - &s.r).norm() < 1e-12);
    }

    #[test]
    fn link_with_ideal_adc_has_no_quantization_noise() {
        let h = sample_fast_fading(8, 2, 3).unwrap();
        let ch = compose_channel(h, &[1.0, 0.1]).unwrap();
        let mut rng = stream_rng(2, Stream::Link, 0);
        let s = simulate_link(&ch, 1.0, &QuantizerSpec::infinite(), &mut rng).unwrap();
        assert_eq!(s.y, s.y_q);
        assert!(s.n_q.norm() == 0.0);
    }

    proptest! {
        #[test]
        fn composed_columns_are_scaled(m in 1usize..6, seed in any::<u64>(), betas in prop::collection::vec(1e-6f64..10.0, 1..5)) {
            let h = sample_fast_fading(m, betas.len(), seed).unwrap();
            let ch = compose_channel(h.clone(), &betas).unwrap();
            for (j, b) in betas.iter().enumerate() {
                for i in 0..m {
                    prop_assert_eq!(ch.g()[(i, j)], h[(i, j)] * b.sqrt());
                }
            }
        }
    }
}
