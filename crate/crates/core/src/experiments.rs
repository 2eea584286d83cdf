//! Scenario sweeps and the three figure presets.
//!
//! A [`ScenarioConfig`] describes a grid over antenna counts and ADC
//! resolutions for one set of users. [`sweep`] evaluates every grid point
//! (Monte Carlo ergodic sum rate, closed-form sum rate, energy efficiency)
//! and returns a [`ResultTable`] whose CSV rendering is byte-for-byte
//! deterministic for a given config.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::channel::{betas_of, drop_users, CellModel};
use crate::error::{Error, Result};
use crate::format::sig10;
use crate::quantizer::{alpha_of_bits, Bits, RhoMode};
use crate::rate::{self, MIN_TRIALS};

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_DROP_SEED: u64 = 1;
pub const DEFAULT_FADING_SEED: u64 = 1;
pub const DEFAULT_MAX_GRID_POINTS: usize = 10_000;
pub const DEFAULT_BANDWIDTH: f64 = 1e6;
pub const DEFAULT_C0: f64 = 1e-4;
pub const DEFAULT_C1: f64 = 0.02;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-user transmit power, either fixed or scaled down with the array size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerMode {
    /// Constant `p_u` (linear).
    Fixed { p_u: f64 },
    /// `p_u = e_u / M` (linear).
    Scaled { e_u: f64 },
}

impl PowerMode {
    pub fn fixed_db(db: f64) -> Self {
        PowerMode::Fixed { p_u: db_to_linear(db) }
    }

    pub fn scaled_db(db: f64) -> Self {
        PowerMode::Scaled { e_u: db_to_linear(db) }
    }

    pub fn p_u(&self, m: usize) -> f64 {
        match *self {
            PowerMode::Fixed { p_u } => p_u,
            PowerMode::Scaled { e_u } => e_u / m as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub m_values: Vec<usize>,
    pub n: usize,
    pub power_mode: PowerMode,
    pub bits_values: Vec<Bits>,
    pub cell: CellModel,
    pub trials: usize,
    pub drop_seed: u64,
    pub fading_seed: u64,
    /// Hz.
    pub bandwidth: f64,
    /// Per-ADC-level power coefficient, Watt.
    pub c0: f64,
    /// Fixed receiver power, Watt.
    pub c1: f64,
    pub rho_mode: RhoMode,
    /// Independent drops evaluated on the same grid; rows carry `drop_index`
    /// when this exceeds one.
    pub num_drops: usize,
    /// Fixed attenuations replacing the random drop.
    pub betas: Option<Vec<f64>>,
    /// Skip the Monte Carlo columns.
    pub approx_only: bool,
    pub max_grid_points: usize,
}

impl ScenarioConfig {
    /// Defaults shared by every preset: N = 10 users, 10^4 trials, the
    /// 1000 m cell, B = 1 MHz, c0 = 1e-4 W, c1 = 0.02 W.
    fn preset(m_values: Vec<usize>, power_mode: PowerMode, bits_values: Vec<Bits>) -> Self {
        ScenarioConfig {
            m_values,
            n: 10,
            power_mode,
            bits_values,
            cell: CellModel::default(),
            trials: DEFAULT_TRIALS,
            drop_seed: DEFAULT_DROP_SEED,
            fading_seed: DEFAULT_FADING_SEED,
            bandwidth: DEFAULT_BANDWIDTH,
            c0: DEFAULT_C0,
            c1: DEFAULT_C1,
            rho_mode: RhoMode::TableThenFormula,
            num_drops: 1,
            betas: None,
            approx_only: false,
            max_grid_points: DEFAULT_MAX_GRID_POINTS,
        }
    }

    /// Rate versus M at p_u = 10 dB for 1, 2 and ideal ADCs.
    pub fn figure1() -> Self {
        Self::preset(
            vec![32, 64, 128, 256, 512],
            PowerMode::fixed_db(10.0),
            vec![Bits::Finite(1), Bits::Finite(2), Bits::Infinite],
        )
    }

    /// Rate versus M with p_u = E_u / M, E_u = 20 dB.
    pub fn figure2() -> Self {
        Self::preset(
            (5..=12).map(|k| 1usize << k).collect(),
            PowerMode::scaled_db(20.0),
            vec![Bits::Finite(1), Bits::Finite(2), Bits::Infinite],
        )
    }

    /// Closed-form rate and energy efficiency versus b at M = 100.
    pub fn figure3() -> Self {
        let mut c = Self::preset(
            vec![100],
            PowerMode::fixed_db(10.0),
            (1..=12).map(Bits::Finite).collect(),
        );
        c.approx_only = true;
        c
    }

    pub fn figure(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Self::figure1()),
            2 => Ok(Self::figure2()),
            3 => Ok(Self::figure3()),
            _ => Err(Error::invalid("id", format!("unknown figure {id}; expected 1, 2 or 3"))),
        }
    }

    pub fn grid_points(&self) -> usize {
        self.num_drops * self.m_values.len() * self.bits_values.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() || self.bits_values.is_empty() {
            return Err(Error::Config("M_values and bits_values must be non-empty".into()));
        }
        if self.m_values.contains(&0) {
            return Err(Error::Config("M_values entries must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if self.trials < MIN_TRIALS {
            return Err(Error::Config(format!(
                "trials must be at least {MIN_TRIALS}, got {}",
                self.trials
            )));
        }
        if self.num_drops == 0 {
            return Err(Error::Config("num_drops must be at least 1".into()));
        }
        let power = match self.power_mode {
            PowerMode::Fixed { p_u } => p_u,
            PowerMode::Scaled { e_u } => e_u,
        };
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::Config("transmit power must be positive and finite".into()));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::Config("bandwidth must be positive".into()));
        }
        if !(self.c0 >= 0.0 && self.c1 >= 0.0 && self.c0 + self.c1 > 0.0) {
            return Err(Error::Config("c0 and c1 must be non-negative and not both zero".into()));
        }
        if let Some(b) = &self.betas {
            if b.len() != self.n {
                return Err(Error::Config(format!(
                    "betas has {} entries but N = {}",
                    b.len(),
                    self.n
                )));
            }
            if b.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Config("betas must be positive and finite".into()));
            }
            if self.num_drops > 1 {
                return Err(Error::Config(
                    "fixed betas cannot be combined with num_drops > 1".into(),
                ));
            }
        }
        self.cell.validate()
    }

    /// Parse the TOML config format. Keys are case-sensitive and unknown
    /// keys are rejected.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = raw.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPowerMode {
    kind: String,
    p_u_db: Option<f64>,
    p_u_linear: Option<f64>,
    e_u_db: Option<f64>,
    e_u_linear: Option<f64>,
}

impl RawPowerMode {
    fn into_mode(self) -> Result<PowerMode> {
        let pick = |db: Option<f64>, lin: Option<f64>, name: &str| match (db, lin) {
            (Some(d), None) => Ok(db_to_linear(d)),
            (None, Some(l)) => Ok(l),
            _ => Err(Error::Config(format!(
                "power_mode needs exactly one of {name}_db or {name}_linear"
            ))),
        };
        match self.kind.as_str() {
            "fixed" if self.e_u_db.is_none() && self.e_u_linear.is_none() => Ok(PowerMode::Fixed {
                p_u: pick(self.p_u_db, self.p_u_linear, "p_u")?,
            }),
            "scaled" if self.p_u_db.is_none() && self.p_u_linear.is_none() => Ok(PowerMode::Scaled {
                e_u: pick(self.e_u_db, self.e_u_linear, "e_u")?,
            }),
            "fixed" | "scaled" => Err(Error::Config(format!(
                "power_mode kind `{}` mixes p_u and e_u keys",
                self.kind
            ))),
            other => Err(Error::Config(format!(
                "power_mode kind must be `fixed` or `scaled`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawConfig {
    M_values: Vec<usize>,
    N: usize,
    power_mode: RawPowerMode,
    bits_values: Vec<Bits>,
    #[serde(default)]
    cell: Option<CellModel>,
    trials: usize,
    drop_seed: u64,
    fading_seed: u64,
    #[serde(default)]
    bandwidth: Option<f64>,
    #[serde(default)]
    c0: Option<f64>,
    #[serde(default)]
    c1: Option<f64>,
    #[serde(default)]
    rho_mode: Option<RhoMode>,
    #[serde(default)]
    num_drops: Option<usize>,
    #[serde(default)]
    betas: Option<Vec<f64>>,
    #[serde(default)]
    approx_only: Option<bool>,
    #[serde(default)]
    max_grid_points: Option<usize>,
}

impl RawConfig {
    fn into_config(self) -> Result<ScenarioConfig> {
        Ok(ScenarioConfig {
            m_values: self.M_values,
            n: self.N,
            power_mode: self.power_mode.into_mode()?,
            bits_values: self.bits_values,
            cell: self.cell.unwrap_or_default(),
            trials: self.trials,
            drop_seed: self.drop_seed,
            fading_seed: self.fading_seed,
            bandwidth: self.bandwidth.unwrap_or(DEFAULT_BANDWIDTH),
            c0: self.c0.unwrap_or(DEFAULT_C0),
            c1: self.c1.unwrap_or(DEFAULT_C1),
            rho_mode: self.rho_mode.unwrap_or_default(),
            num_drops: self.num_drops.unwrap_or(1),
            betas: self.betas,
            approx_only: self.approx_only.unwrap_or(false),
            max_grid_points: self.max_grid_points.unwrap_or(DEFAULT_MAX_GRID_POINTS),
        })
    }
}

/// Optional replacements for a preset's fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub m_values: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub bits_values: Option<Vec<Bits>>,
    pub power_mode: Option<PowerMode>,
    pub trials: Option<usize>,
    pub drop_seed: Option<u64>,
    pub fading_seed: Option<u64>,
    pub betas: Option<Vec<f64>>,
    pub num_drops: Option<usize>,
    pub rho_mode: Option<RhoMode>,
    pub approx_only: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ScenarioConfig) -> ScenarioConfig {
        if let Some(v) = &self.m_values {
            cfg.m_values = v.clone();
        }
        if let Some(b) = &self.betas {
            cfg.betas = Some(b.clone());
            cfg.n = b.len();
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(v) = &self.bits_values {
            cfg.bits_values = v.clone();
        }
        if let Some(p) = self.power_mode {
            cfg.power_mode = p;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.drop_seed {
            cfg.drop_seed = s;
        }
        if let Some(s) = self.fading_seed {
            cfg.fading_seed = s;
        }
        if let Some(d) = self.num_drops {
            cfg.num_drops = d;
        }
        if let Some(m) = self.rho_mode {
            cfg.rho_mode = m;
        }
        if let Some(a) = self.approx_only {
            cfg.approx_only = a;
        }
        cfg
    }
}

/// One `(drop, M, bits)` grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub m: usize,
    pub n: usize,
    pub bits: Bits,
    pub p_u_linear: f64,
    pub sum_rate_mc: Option<f64>,
    pub sum_rate_mc_stderr: Option<f64>,
    pub sum_rate_approx: f64,
    /// `B * sum_rate_approx / (c0 M 2^b + c1)`; absent for ideal ADCs.
    pub energy_efficiency: Option<f64>,
    /// Seed that produced this row's drop.
    pub drop_seed: u64,
    pub fading_seed: u64,
    pub trials: usize,
    pub drop_index: Option<usize>,
    /// `sum_n log2(1 + alpha beta_n E_u)` under power scaling.
    pub power_scaled_limit: Option<f64>,
}

pub const BASE_COLUMNS: [&str; 11] = [
    "M",
    "N",
    "bits",
    "p_u_linear",
    "sum_rate_mc",
    "sum_rate_mc_stderr",
    "sum_rate_approx",
    "energy_efficiency",
    "drop_seed",
    "fading_seed",
    "trials",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(sig10).unwrap_or_default()
}

impl ResultTable {
    /// Canonical order: drop, then M, then bits with `inf` last.
    pub fn sort(&mut self) {
        self.rows.sort_by_key(|r| (r.drop_index, r.m, r.bits));
    }

    fn has_drop_index(&self) -> bool {
        self.rows.iter().any(|r| r.drop_index.is_some())
    }

    fn has_limit(&self) -> bool {
        self.rows.iter().any(|r| r.power_scaled_limit.is_some())
    }

    pub fn columns(&self) -> Vec<&'static str> {
        let mut cols = BASE_COLUMNS.to_vec();
        if self.has_drop_index() {
            cols.push("drop_index");
        }
        if self.has_limit() {
            cols.push("power_scaled_limit");
        }
        cols
    }

    /// UTF-8 CSV, 10 significant digits, empty cells for absent values.
    pub fn to_csv(&self) -> String {
        let (drops, limit) = (self.has_drop_index(), self.has_limit());
        let mut out = self.columns().join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.m,
                r.n,
                r.bits,
                sig10(r.p_u_linear),
                opt(r.sum_rate_mc),
                opt(r.sum_rate_mc_stderr),
                sig10(r.sum_rate_approx),
                opt(r.energy_efficiency),
                r.drop_seed,
                r.fading_seed,
                r.trials
            );
            if drops {
                let _ = write!(out, ",{}", r.drop_index.map(|d| d.to_string()).unwrap_or_default());
            }
            if limit {
                let _ = write!(out, ",{}", opt(r.power_scaled_limit));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Parse CSV produced by [`ResultTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Config("empty CSV".into()))?
            .split(',')
            .collect();
        if header.len() < BASE_COLUMNS.len() || header[..BASE_COLUMNS.len()] != BASE_COLUMNS {
            return Err(Error::Config("CSV header does not match the result schema".into()));
        }
        let col = |name: &str| header.iter().position(|h| *h == name);
        let (drop_col, limit_col) = (col("drop_index"), col("power_scaled_limit"));
        let bad = |what: &str, line: usize| Error::Config(format!("CSV line {}: bad {what}", line + 2));

        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != header.len() {
                return Err(bad("field count", i));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad(BASE_COLUMNS[k], i));
            let maybe = |k: usize| -> Result<Option<f64>> {
                if f[k].is_empty() {
                    Ok(None)
                } else {
                    f[k].parse().map(Some).map_err(|_| bad(header[k], i))
                }
            };
            let int = |k: usize| f[k].parse::<u64>().map_err(|_| bad(header[k], i));
            rows.push(ResultRow {
                m: int(0)? as usize,
                n: int(1)? as usize,
                bits: f[2].parse().map_err(|_| bad("bits", i))?,
                p_u_linear: num(3)?,
                sum_rate_mc: maybe(4)?,
                sum_rate_mc_stderr: maybe(5)?,
                sum_rate_approx: num(6)?,
                energy_efficiency: maybe(7)?,
                drop_seed: int(8)?,
                fading_seed: int(9)?,
                trials: int(10)? as usize,
                drop_index: match drop_col {
                    Some(k) if !f[k].is_empty() => Some(int(k)? as usize),
                    _ => None,
                },
                power_scaled_limit: match limit_col {
                    Some(k) => maybe(k)?,
                    None => None,
                },
            });
        }
        Ok(ResultTable { rows })
    }

    /// Rows with the given resolution, in table order.
    pub fn series(&self, bits: Bits) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(move |r| r.bits == bits)
    }

    pub fn get(&self, m: usize, bits: Bits) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.m == m && r.bits == bits)
    }

    /// Average multi-drop rows over drops, one row per `(M, bits)`.
    /// Monte Carlo stderr combines the per-drop stderrs.
    pub fn drop_average(&self) -> ResultTable {
        let mut keys: Vec<(usize, Bits)> = self.rows.iter().map(|r| (r.m, r.bits)).collect();
        keys.sort();
        keys.dedup();
        let rows = keys
            .into_iter()
            .map(|(m, bits)| {
                let group: Vec<&ResultRow> = self.rows.iter().filter(|r| r.m == m && r.bits == bits).collect();
                let k = group.len() as f64;
                let mean = |f: &dyn Fn(&ResultRow) -> Option<f64>| -> Option<f64> {
                    group.iter().map(|r| f(r)).sum::<Option<f64>>().map(|s| s / k)
                };
                let stderr = group
                    .iter()
                    .map(|r| r.sum_rate_mc_stderr.map(|s| s * s))
                    .sum::<Option<f64>>()
                    .map(|v| v.sqrt() / k);
                ResultRow {
                    m,
                    n: group[0].n,
                    bits,
                    p_u_linear: group[0].p_u_linear,
                    sum_rate_mc: mean(&|r| r.sum_rate_mc),
                    sum_rate_mc_stderr: stderr,
                    sum_rate_approx: mean(&|r| Some(r.sum_rate_approx)).unwrap_or(0.0),
                    energy_efficiency: mean(&|r| r.energy_efficiency),
                    drop_seed: group[0].drop_seed,
                    fading_seed: group[0].fading_seed,
                    trials: group[0].trials,
                    drop_index: None,
                    power_scaled_limit: mean(&|r| r.power_scaled_limit),
                }
            })
            .collect();
        ResultTable { rows }
    }
}

/// Seed of drop `index` in a multi-drop run.
pub fn drop_seed_for(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

/// Attenuations used for drop `index` of `cfg`.
pub fn scenario_betas(cfg: &ScenarioConfig, index: usize) -> Result<Vec<f64>> {
    match &cfg.betas {
        Some(b) => Ok(b.clone()),
        None => Ok(betas_of(&drop_users(
            &cfg.cell,
            cfg.n,
            drop_seed_for(cfg.drop_seed, index),
        )?)),
    }
}

/// Evaluate the full `(drops x M x bits)` grid.
///
/// Each `(drop, M)` job draws its fast fading from `fading_seed` and shares
/// those realizations across all resolutions, so every row equals a direct
/// [`rate::ergodic_rate_mc`] call with the recorded seeds.
pub fn sweep(cfg: &ScenarioConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let points = cfg.grid_points();
    if points > cfg.max_grid_points {
        return Err(Error::GridTooLarge {
            points,
            cap: cfg.max_grid_points,
        });
    }
    let alphas: Vec<f64> = cfg
        .bits_values
        .iter()
        .map(|&b| alpha_of_bits(b, cfg.rho_mode))
        .collect::<Result<_>>()?;
    let drops: Vec<Vec<f64>> = (0..cfg.num_drops)
        .map(|d| scenario_betas(cfg, d))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..cfg.num_drops)
        .flat_map(|d| cfg.m_values.iter().map(move |&m| (d, m)))
        .collect();
    let chunks: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(d, m)| evaluate_point(cfg, &alphas, &drops[d], d, m))
        .collect::<Result<_>>()?;

    let mut table = ResultTable {
        rows: chunks.into_iter().flatten().collect(),
    };
    table.sort();
    Ok(table)
}

fn evaluate_point(
    cfg: &ScenarioConfig,
    alphas: &[f64],
    betas: &[f64],
    drop: usize,
    m: usize,
) -> Result<Vec<ResultRow>> {
    let p_u = cfg.power_mode.p_u(m);
    let mc = if cfg.approx_only {
        None
    } else {
        Some(rate::ergodic_rate_mc_multi(
            betas,
            m,
            p_u,
            alphas,
            cfg.trials,
            cfg.fading_seed,
        )?)
    };
    cfg.bits_values
        .iter()
        .zip(alphas)
        .enumerate()
        .map(|(k, (&bits, &alpha))| {
            let approx = rate::approx_sum_rate(betas, m, p_u, alpha)?;
            let energy_efficiency = match bits {
                Bits::Finite(_) => Some(rate::energy_efficiency(approx, cfg.bandwidth, m, bits, cfg.c0, cfg.c1)?),
                Bits::Infinite => None,
            };
            let power_scaled_limit = match cfg.power_mode {
                PowerMode::Scaled { e_u } => Some(
                    betas
                        .iter()
                        .map(|&b| rate::power_scaled_limit(b, e_u, alpha))
                        .sum::<Result<f64>>()?,
                ),
                PowerMode::Fixed { .. } => None,
            };
            let sum = mc.as_ref().map(|r| r[k].sum);
            Ok(ResultRow {
                m,
                n: betas.len(),
                bits,
                p_u_linear: p_u,
                sum_rate_mc: sum.map(|s| s.mean),
                sum_rate_mc_stderr: sum.map(|s| s.stderr),
                sum_rate_approx: approx,
                energy_efficiency,
                drop_seed: drop_seed_for(cfg.drop_seed, drop),
                fading_seed: cfg.fading_seed,
                trials: cfg.trials,
                drop_index: (cfg.num_drops > 1).then_some(drop),
                power_scaled_limit,
            })
        })
        .collect()
}

pub fn run_figure(id: u32, overrides: &Overrides) -> Result<ResultTable> {
    sweep(&overrides.apply(ScenarioConfig::figure(id)?))
}

pub fn run_figure1(overrides: &Overrides) -> Result<ResultTable> {
    run_figure(1, overrides)
}

pub fn run_figure2(overrides: &Overrides) -> Result<ResultTable> {
    run_figure(2, overrides)
}

pub fn run_figure3(overrides: &Overrides) -> Result<ResultTable> {
    run_figure(3, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        let mut c = ScenarioConfig::figure1();
        c.m_values = vec![8, 16];
        c.n = 3;
        c.trials = 100;
        c
    }

    const EXAMPLE: &str = r#"
M_values = [16, 8]
N = 3
bits_values = [1, "inf", 2]
trials = 100
drop_seed = 4
fading_seed = 5
bandwidth = 1e6
c0 = 1e-4
c1 = 0.02

[power_mode]
kind = "fixed"
p_u_db = 10.0

[cell]
cell_radius = 1000.0
exclusion_radius = 100.0
pathloss_exponent = 3.8
shadow_std_db = 8.0
"#;

    #[test]
    fn parses_config() {
        let c = ScenarioConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(c.m_values, vec![16, 8]);
        assert_eq!(c.bits_values, vec![Bits::Finite(1), Bits::Infinite, Bits::Finite(2)]);
        assert_eq!(c.power_mode, PowerMode::Fixed { p_u: 10.0 });
        assert_eq!((c.drop_seed, c.fading_seed, c.n), (4, 5, 3));
    }

    #[test]
    fn config_rejects_unknown_and_miscased_keys() {
        let e = ScenarioConfig::from_toml_str(&format!("{EXAMPLE}\n[extra]\nx = 1\n")).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        let lower = EXAMPLE.replace("M_values", "m_values");
        assert!(ScenarioConfig::from_toml_str(&lower).is_err());
        let bad_power = EXAMPLE.replace("kind = \"fixed\"", "kind = \"scaled\"");
        assert!(ScenarioConfig::from_toml_str(&bad_power).is_err());
        let few_trials = EXAMPLE.replace("trials = 100", "trials = 99");
        assert!(ScenarioConfig::from_toml_str(&few_trials).is_err());
        let empty = EXAMPLE.replace("M_values = [16, 8]", "M_values = []");
        assert!(ScenarioConfig::from_toml_str(&empty).is_err());
    }

    #[test]
    fn rows_sorted_with_inf_last() {
        let t = sweep(&ScenarioConfig::from_toml_str(EXAMPLE).unwrap()).unwrap();
        let keys: Vec<(usize, Bits)> = t.rows.iter().map(|r| (r.m, r.bits)).collect();
        assert_eq!(
            keys,
            vec![
                (8, Bits::Finite(1)),
                (8, Bits::Finite(2)),
                (8, Bits::Infinite),
                (16, Bits::Finite(1)),
                (16, Bits::Finite(2)),
                (16, Bits::Infinite)
            ]
        );
        for r in &t.rows {
            assert_eq!(r.energy_efficiency.is_none(), r.bits.is_infinite());
            assert!(r.sum_rate_mc_stderr.unwrap() >= 0.0);
        }
    }

    #[test]
    fn grid_cap_refuses() {
        let mut c = small();
        c.max_grid_points = 5;
        assert!(matches!(sweep(&c), Err(Error::GridTooLarge { points: 6, cap: 5 })));
    }

    #[test]
    fn csv_round_trip_and_header() {
        let t = sweep(&small()).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with(
            "M,N,bits,p_u_linear,sum_rate_mc,sum_rate_mc_stderr,sum_rate_approx,energy_efficiency,drop_seed,fading_seed,trials\n"
        ));
        let back = ResultTable::from_csv(&csv).unwrap();
        assert_eq!(back.to_csv(), csv);
        assert_eq!(back.rows.len(), t.rows.len());
    }

    #[test]
    fn multi_drop_rows_carry_index() {
        let mut c = small();
        c.num_drops = 2;
        let t = sweep(&c).unwrap();
        assert_eq!(t.rows.len(), 12);
        assert!(t.columns().contains(&"drop_index"));
        assert_eq!(t.rows[0].drop_seed, c.drop_seed);
        assert_eq!(t.rows.last().unwrap().drop_seed, c.drop_seed + 1);
        let avg = t.drop_average();
        assert_eq!(avg.rows.len(), 6);
        let pair: Vec<f64> = t
            .rows
            .iter()
            .filter(|r| r.m == 8 && r.bits == Bits::Finite(1))
            .map(|r| r.sum_rate_approx)
            .collect();
        assert!((avg.rows[0].sum_rate_approx - (pair[0] + pair[1]) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides {
            betas: Some(vec![1.0, 2.0]),
            trials: Some(200),
            ..Default::default()
        };
        let c = o.apply(ScenarioConfig::figure2());
        assert_eq!(c.n, 2);
        assert_eq!(c.trials, 200);
        assert!(ScenarioConfig::figure(4).is_err());
    }

    #[test]
    fn approx_only_leaves_mc_empty() {
        let mut c = small();
        c.approx_only = true;
        let t = sweep(&c).unwrap();
        assert!(t.rows.iter().all(|r| r.sum_rate_mc.is_none()));
        assert!(t.to_csv().lines().nth(1).unwrap().contains(",,"));
    }
}
