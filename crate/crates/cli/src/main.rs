//! `reserve-insure`: batch front end for bids, contracts, Monte Carlo
//! studies and network dispatch.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use reserve_insure::scenario::PenaltySpec;
use reserve_insure::Error;

use config::RunConfig;
use output::Out;

#[derive(Parser)]
#[command(name = "reserve-insure", version, about = "Storage-backed insurance contracts for renewable producers")]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo scenarios per day.
    #[arg(long, global = true)]
    scenarios: Option<usize>,
    /// Output directory (default ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write SVG charts.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct DataArgs {
    /// Price CSV: [date,]hour,price_usd_per_mwh
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Wind CSV: timestamp,power_mw (fitted on the fly)
    #[arg(long)]
    wind: Option<PathBuf>,
    /// Renewable model JSON (single model or output of `fit`)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Month used for undated price files
    #[arg(long)]
    month: Option<u32>,
    /// Slots per day in the price file
    #[arg(long)]
    slots: Option<usize>,
    /// Penalty as max price / penalty ratio
    #[arg(long, conflicts_with = "penalty")]
    penalty_ratio: Option<f64>,
    /// Absolute penalty in $/MWh
    #[arg(long)]
    penalty: Option<f64>,
    /// Storage capacity (MWh)
    #[arg(long)]
    e_max: Option<f64>,
    /// Storage operating cost ($/MWh moved)
    #[arg(long)]
    cost_coeff: Option<f64>,
}

#[derive(Args, Default)]
struct CaseArgs {
    /// Network case JSON (default: shipped modified IEEE 14-bus)
    #[arg(long)]
    case: Option<PathBuf>,
    /// Multiply every line limit
    #[arg(long)]
    line_scale: Option<f64>,
    /// λ/λ_p for the wind commitment
    #[arg(long)]
    lambda_ratio: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit hourly Gaussian wind models per month.
    Fit {
        #[arg(long)]
        wind: Option<PathBuf>,
        /// Nameplate capacity (MW); defaults to the largest reading
        #[arg(long)]
        capacity: Option<f64>,
    },
    /// Optimal day-ahead bids with and without the standard reserve.
    Bid(DataArgs),
    /// Reserve price interval and standard contract per day.
    Contract(DataArgs),
    /// Profitability class per day.
    Classify {
        #[command(flatten)]
        data: DataArgs,
        /// Reserve price (default: the day's arbitrage peak price)
        #[arg(long)]
        pi: Option<f64>,
    },
    /// Monte Carlo profit study by month.
    Simulate {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated months to include
        #[arg(long, value_delimiter = ',')]
        months: Option<Vec<u32>>,
        /// Generate a year of prices and wind instead of reading files
        #[arg(long)]
        synthetic_year: Option<i32>,
    },
    /// Commitment sweep over the excess-energy price.
    Twoway {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        slot: Option<usize>,
        /// Reserve held (MWh)
        #[arg(long)]
        reserve: Option<f64>,
        /// Reserve price paid ($/MWh)
        #[arg(long)]
        pi_r: Option<f64>,
        /// Number of sweep points
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Multi-period DC dispatch with LMPs.
    Network(CaseArgs),
    /// Contract feasibility for every wind/storage placement.
    Matrix(CaseArgs),
}

fn apply_data(cfg: &mut RunConfig, d: DataArgs) {
    cfg.prices = d.prices.or(cfg.prices.take());
    cfg.wind = d.wind.or(cfg.wind.take());
    cfg.model = d.model.or(cfg.model.take());
    cfg.month = d.month.or(cfg.month);
    cfg.slots = d.slots.or(cfg.slots);
    if let Some(r) = d.penalty_ratio {
        cfg.penalty = Some(PenaltySpec::Ratio(r));
    }
    if let Some(p) = d.penalty {
        cfg.penalty = Some(PenaltySpec::Absolute(p));
    }
    if d.e_max.is_some() || d.cost_coeff.is_some() {
        let mut s = cfg.storage();
        if let Some(e) = d.e_max {
            s.e_max = e;
        }
        if let Some(c) = d.cost_coeff {
            s.cost_coeff = c;
        }
        cfg.storage = Some(s);
    }
}

fn apply_case(cfg: &mut RunConfig, c: CaseArgs) {
    cfg.case = c.case.or(cfg.case.take());
    cfg.line_scale = c.line_scale.or(cfg.line_scale);
    cfg.lambda_ratio = c.lambda_ratio.or(cfg.lambda_ratio);
}

fn run(cli: Cli) -> Result<serde_json::Value, Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.seed = cli.seed.or(cfg.seed);
    cfg.scenarios = cli.scenarios.or(cfg.scenarios);
    cfg.out = cli.out.or(cfg.out.take());
    let svg = cli.svg || cfg.svg.unwrap_or(false);
    let mut out = Out::new(&cfg.out_dir())?;
    let summary = match cli.command {
        Command::Fit { wind, capacity } => {
            cfg.wind = wind.or(cfg.wind.take());
            cfg.wind_capacity = capacity.or(cfg.wind_capacity);
            commands::fit(&cfg, &mut out)?
        }
        Command::Bid(d) => {
            apply_data(&mut cfg, d);
            commands::bid(&cfg, &mut out)?
        }
        Command::Contract(d) => {
            apply_data(&mut cfg, d);
            commands::contract(&cfg, &mut out)?
        }
        Command::Classify { data, pi } => {
            apply_data(&mut cfg, data);
            cfg.pi = pi.or(cfg.pi);
            commands::classify(&cfg, &mut out)?
        }
        Command::Simulate { data, months, synthetic_year } => {
            apply_data(&mut cfg, data);
            cfg.months = months.or(cfg.months.take());
            cfg.synthetic_year = synthetic_year.or(cfg.synthetic_year);
            commands::simulate(&cfg, &mut out, svg)?
        }
        Command::Twoway { data, slot, reserve, pi_r, steps } => {
            apply_data(&mut cfg, data);
            cfg.slot = slot.or(cfg.slot);
            cfg.reserve = reserve.or(cfg.reserve);
            cfg.pi_r = pi_r.or(cfg.pi_r);
            cfg.pi_e_steps = steps.or(cfg.pi_e_steps);
            commands::twoway(&cfg, &mut out)?
        }
        Command::Network(c) => {
            apply_case(&mut cfg, c);
            commands::network(&cfg, &mut out)?
        }
        Command::Matrix(c) => {
            apply_case(&mut cfg, c);
            commands::matrix(&cfg, &mut out, svg)?
        }
    };
    let files: Vec<String> = out.written.iter().map(|p| p.display().to_string()).collect();
    Ok(json!({ "ok": true, "summary": summary, "files": files }))
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = json!({ "ok": false, "error": { "kind": kind, "message": message } });
    let _ = writeln!(std::io::stderr(), "{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim(), 2),
    };
    if let Ok(v) = std::env::var("RESERVE_INSURE_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    return fail("internal", &e.to_string(), 1);
                }
            }
            _ => return fail("usage", &format!("RESERVE_INSURE_THREADS must be a positive integer, got '{v}'"), 2),
        }
    }
    match run(cli) {
        Ok(v) => {
            // a closed stdout (e.g. piped into `head`) is not a failure
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
