//! Standard normal density, tail and quantile helpers.

use libm::erfc;
use std::f64::consts::FRAC_1_SQRT_2;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density. Zero at ±∞.
#[inline]
pub fn pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        INV_SQRT_2PI * (-0.5 * x * x).exp()
    }
}

/// Upper tail probability `P(X > x)`.
#[inline]
pub fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `x · φ(x)`, taken as zero at ±∞.
#[inline]
fn x_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x * pdf(x)
    }
}

/// `P(lo < X < hi)`, evaluated on whichever tail keeps it free of cancellation.
pub fn interval_probability(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        upper_tail(lo) - upper_tail(hi)
    } else if hi <= 0.0 {
        upper_tail(-hi) - upper_tail(-lo)
    } else {
        1.0 - upper_tail(hi) - upper_tail(-lo)
    }
}

/// Standard normal quantile: Acklam's rational approximation polished with
/// one Halley step against `erfc`.
pub fn quantile(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    let x = if p < P_LOW {
        tail(p)
    } else if p > 1.0 - P_LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // Halley refinement on the side where the tail probability is small.
    let e = if x < 0.0 {
        upper_tail(-x) - p
    } else {
        (1.0 - p) - upper_tail(x)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Zeroth, first and second partial moments of X ~ N(0,1) over `(lo, hi)`.
#[derive(Debug, Clone, Copy)]
pub struct CellMoments {
    pub mass: f64,
    pub first: f64,
    pub second: f64,
}

impl CellMoments {
    pub fn over(lo: f64, hi: f64) -> Self {
        let mass = interval_probability(lo, hi);
        CellMoments {
            mass,
            first: pdf(lo) - pdf(hi),
            second: mass + x_pdf(lo) - x_pdf(hi),
        }
    }

    /// `E[X | lo < X < hi]`.
    pub fn centroid(&self) -> f64 {
        self.first / self.mass
    }

    /// `E[(X - c)^2 ; lo < X < hi]` from the partial moments.
    ///
    /// Cancels badly once the cell is much narrower than `|c|`; use
    /// [`cell_distortion`] for those.
    pub fn distortion_at(&self, c: f64) -> f64 {
        (self.second - 2.0 * c * self.first + c * c * self.mass).max(0.0)
    }
}

/// Width below which [`cell_distortion`] switches to quadrature.
const NARROW_CELL: f64 = 0.25;

const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_69),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_34),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_05),
    (-0.183_434_642_495_649_78, 0.362_683_783_378_361_77),
    (0.183_434_642_495_649_78, 0.362_683_783_378_361_77),
    (0.525_532_409_916_329, 0.313_706_645_877_887_05),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_34),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_69),
];

/// `E[X | lo < X < hi]`.
///
/// Narrow cells are integrated about their midpoint so the result is
/// accurate to rounding relative to the cell width, not to `1/width`.
pub fn cell_centroid(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() && hi.is_finite() && hi - lo < NARROW_CELL {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let (mass, offset) = GAUSS_LEGENDRE_8.iter().fold((0.0, 0.0), |(m, o), &(x, w)| {
            let f = w * pdf(mid + half * x);
            (m + f, o + f * half * x)
        });
        mid + offset / mass
    } else {
        CellMoments::over(lo, hi).centroid()
    }
}

/// `E[(X - c)^2 ; lo < X < hi]` for X ~ N(0,1).
///
/// Closed form for wide and unbounded cells, 8-point Gauss-Legendre for
/// narrow ones, where the integrand is a near-quadratic and the rule is
/// accurate to rounding.
pub fn cell_distortion(lo: f64, hi: f64, c: f64) -> f64 {
    if lo.is_finite() && hi.is_finite() && hi - lo < NARROW_CELL {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let sum: f64 = GAUSS_LEGENDRE_8
            .iter()
            .map(|&(x, w)| {
                let u = mid + half * x;
                w * (u - c) * (u - c) * pdf(u)
            })
            .sum();
        half * sum
    } else {
        CellMoments::over(lo, hi).distortion_at(c)
    }
}
