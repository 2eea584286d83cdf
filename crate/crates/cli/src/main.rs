use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qmimo::channel::{betas_of, drop_users, CellModel};
use qmimo::experiments::{self, Overrides, PowerMode, ResultTable, ScenarioConfig};
use qmimo::quantizer::{rho_of_bits, QuantizerSpec};
use qmimo::rate::{self, RatePoint};
use qmimo::validation::{self, LOW_POWER_TRIALS};
use qmimo::{Bits, Error, RhoMode};

#[derive(Parser)]
#[command(name = "qmimo", version, about = "Quantized massive-MIMO uplink rates")]
struct Cli {
    /// Worker threads for Monte Carlo runs (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distortion factor and linear gain of a b-bit ADC.
    Rho(RhoArgs),
    /// Ergodic and closed-form rates at one operating point.
    Rate(RateArgs),
    /// Regenerate a figure's data table.
    Figure(FigureArgs),
    /// Run a scenario grid from a TOML config.
    Sweep(SweepArgs),
    /// Statistical self-checks of the channel and quantizer models.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RhoArgs {
    /// ADC resolution: a positive integer or `inf`.
    #[arg(long)]
    bits: Bits,
    #[arg(long, default_value = "table")]
    mode: RhoMode,
    /// Machine-readable output.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
#[group(id = "power", multiple = false)]
struct PowerArgs {
    /// Per-user transmit power in dB.
    #[arg(long = "pu-db", group = "power", allow_hyphen_values = true)]
    pu_db: Option<f64>,
    /// Per-user transmit power, linear.
    #[arg(long = "pu-linear", group = "power")]
    pu_linear: Option<f64>,
    /// Scaled power E_u in dB; p_u = E_u / M.
    #[arg(long = "eu-db", group = "power", allow_hyphen_values = true)]
    eu_db: Option<f64>,
}

impl PowerArgs {
    fn mode(&self) -> Option<PowerMode> {
        if let Some(db) = self.pu_db {
            Some(PowerMode::fixed_db(db))
        } else if let Some(p_u) = self.pu_linear {
            Some(PowerMode::Fixed { p_u })
        } else {
            self.eu_db.map(PowerMode::scaled_db)
        }
    }
}

#[derive(Args)]
struct RateArgs {
    /// Base-station antennas.
    #[arg(long)]
    m: usize,
    /// Users; inferred from `--betas` when omitted.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    power: PowerArgs,
    #[arg(long)]
    bits: Bits,
    /// Comma-separated large-scale fading coefficients; replaces the random drop.
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Fast-fading seed.
    #[arg(long, default_value_t = experiments::DEFAULT_FADING_SEED)]
    seed: u64,
    /// Seed of the random user drop.
    #[arg(long = "drop-seed", default_value_t = experiments::DEFAULT_DROP_SEED)]
    drop_seed: u64,
    #[arg(long, default_value_t = experiments::DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value = "table")]
    mode: RhoMode,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct FigureArgs {
    /// Figure number: 1, 2 or 3.
    #[arg(long)]
    id: u32,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated antenna counts.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated resolutions.
    #[arg(long, value_delimiter = ',')]
    bits: Option<Vec<Bits>>,
    #[command(flatten)]
    power: PowerArgs,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "drop-seed")]
    drop_seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    mode: Option<RhoMode>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Channel realizations per moment check.
    #[arg(long, default_value_t = validation::DEFAULT_VALIDATION_TRIALS)]
    trials: usize,
    /// Gaussian samples per quantizer check.
    #[arg(long, default_value_t = validation::DEFAULT_AQNM_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

enum CliError {
    Usage(String),
    Core(Error),
    Io(PathBuf, std::io::Error),
    ChecksFailed,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Rho(a) => cmd_rho(a),
        Command::Rate(a) => cmd_rate(a),
        Command::Figure(a) => cmd_figure(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
        Err(CliError::Io(path, e)) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(1)
        }
        Err(CliError::ChecksFailed) => {
            eprintln!("error: one or more checks failed");
            ExitCode::from(1)
        }
    }
}

fn cmd_rho(a: RhoArgs) -> CliResult {
    let rho = rho_of_bits(a.bits, a.mode)?;
    let alpha = 1.0 - rho;
    let levels = match (a.bits, a.mode) {
        (Bits::Finite(b), RhoMode::LloydMax) => Some(QuantizerSpec::lloyd_max(b)?.levels().to_vec()),
        _ => None,
    };
    if a.csv {
        println!("bits,rho,alpha");
        println!("{},{rho},{alpha}", a.bits);
    } else {
        println!("bits  {}", a.bits);
        println!("rho   {rho:.6}");
        println!("alpha {alpha:.6}");
        if let Some(l) = levels {
            let shown: Vec<String> = l.iter().map(|v| format!("{v:.6}")).collect();
            println!("levels {}", shown.join(" "));
        }
    }
    Ok(())
}

fn scenario_betas(n: Option<usize>, betas: Option<Vec<f64>>, drop_seed: u64) -> CliResult<Vec<f64>> {
    match (n, betas) {
        (Some(n), Some(b)) if b.len() != n => Err(CliError::Usage(format!(
            "--betas has {} entries but --n is {n}",
            b.len()
        ))),
        (_, Some(b)) => Ok(b),
        (Some(n), None) => Ok(betas_of(&drop_users(&CellModel::default(), n, drop_seed)?)),
        (None, None) => Err(CliError::Usage("one of --n or --betas is required".into())),
    }
}

fn cmd_rate(a: RateArgs) -> CliResult {
    let betas = scenario_betas(a.n, a.betas, a.drop_seed)?;
    let p_u = a.power.mode().unwrap_or(PowerMode::fixed_db(10.0)).p_u(a.m);
    let alpha = 1.0 - rho_of_bits(a.bits, a.mode)?;
    let mut point = rate::rate_point(&betas, a.m, p_u, alpha, Some((a.trials, a.seed)))?;
    if a.bits.finite().is_some() {
        point.energy_efficiency = Some(rate::energy_efficiency(
            point.sum_rate_approx,
            experiments::DEFAULT_BANDWIDTH,
            a.m,
            a.bits,
            experiments::DEFAULT_C0,
            experiments::DEFAULT_C1,
        )?);
    }
    if a.csv {
        print!("{}", rate_csv(&point, p_u));
    } else {
        print_rate(&point, &betas, a.m, a.bits, p_u, a.trials);
    }
    Ok(())
}

/// `key,value` pairs; values use shortest round-trip formatting.
fn rate_csv(point: &RatePoint, p_u: f64) -> String {
    let mut out = String::from("key,value\n");
    let mut put = |k: String, v: f64| out.push_str(&format!("{k},{v}\n"));
    put("p_u_linear".into(), p_u);
    put("sum_rate_approx".into(), point.sum_rate_approx);
    if let Some(s) = point.sum_rate_mc {
        put("sum_rate_mc".into(), s.mean);
        put("sum_rate_mc_stderr".into(), s.stderr);
    }
    if let Some(e) = point.energy_efficiency {
        put("energy_efficiency".into(), e);
    }
    for (n, r) in point.per_user_approx.iter().enumerate() {
        put(format!("rate_approx_{n}"), *r);
    }
    for (n, r) in point.per_user_mc.iter().flatten().enumerate() {
        put(format!("rate_mc_{n}"), r.mean);
        put(format!("rate_mc_stderr_{n}"), r.stderr);
    }
    out
}

fn print_rate(point: &RatePoint, betas: &[f64], m: usize, bits: Bits, p_u: f64, trials: usize) {
    println!("M={m} N={} bits={bits} p_u={p_u:.6} trials={trials}", betas.len());
    println!(
        "{:>4} {:>12} {:>12} {:>12} {:>10}",
        "user", "beta", "approx", "mc", "stderr"
    );
    let mc = point.per_user_mc.as_deref().unwrap_or(&[]);
    for (n, (&b, &r)) in betas.iter().zip(&point.per_user_approx).enumerate() {
        let (mean, se) = mc.get(n).map_or((f64::NAN, f64::NAN), |e| (e.mean, e.stderr));
        println!("{n:>4} {b:>12.5e} {r:>12.6} {mean:>12.6} {se:>10.2e}");
    }
    match point.sum_rate_mc {
        Some(s) => println!(
            "sum  approx={:.6} mc={:.6} stderr={:.2e}",
            point.sum_rate_approx, s.mean, s.stderr
        ),
        None => println!("sum  approx={:.6}", point.sum_rate_approx),
    }
    if let Some(e) = point.energy_efficiency {
        println!("energy efficiency {e:.6e} bit/J");
    }
}

fn cmd_figure(a: FigureArgs) -> CliResult {
    let overrides = Overrides {
        m_values: a.m,
        n: a.n,
        bits_values: a.bits,
        power_mode: a.power.mode(),
        trials: a.trials,
        drop_seed: a.drop_seed,
        fading_seed: a.seed,
        betas: a.betas,
        rho_mode: a.mode,
        ..Default::default()
    };
    if let (Some(n), Some(b)) = (overrides.n, &overrides.betas) {
        if n != b.len() {
            return Err(CliError::Usage(format!(
                "--betas has {} entries but --n is {n}",
                b.len()
            )));
        }
    }
    let cfg = overrides.apply(ScenarioConfig::figure(a.id)?);
    emit(&experiments::sweep(&cfg)?, a.out.as_deref())
}

fn cmd_sweep(a: SweepArgs) -> CliResult {
    let cfg = ScenarioConfig::from_path(&a.config)?;
    emit(&experiments::sweep(&cfg)?, a.out.as_deref())
}

/// Print the table, or write it atomically and print a summary.
fn emit(table: &ResultTable, out: Option<&Path>) -> CliResult {
    let csv = table.to_csv();
    let Some(path) = out else {
        print!("{csv}");
        return Ok(());
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let written = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(csv.as_bytes()).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = written {
        let _ = std::fs::remove_file(&tmp);
        return Err(CliError::Io(path.to_path_buf(), e));
    }
    println!("wrote {} rows to {}", table.rows.len(), path.display());
    for r in &table.rows {
        let mc = r.sum_rate_mc.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        println!(
            "  M={:<5} bits={:<3} approx={:.4} mc={mc}",
            r.m, r.bits, r.sum_rate_approx
        );
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> CliResult {
    if a.trials < LOW_POWER_TRIALS {
        eprintln!(
            "warning: {} trials gives low statistical power; use at least {LOW_POWER_TRIALS}",
            a.trials
        );
    }
    let report = validation::run_validation(a.trials, a.samples, a.seed)?;
    for line in report.lines() {
        println!("{line}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}
