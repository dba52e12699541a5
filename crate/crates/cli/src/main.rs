//! `cuspmoment`: eigensystem stores, single evaluations, moment comparisons
//! and identity sweeps from the command line.

mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cuspmoment::localfactors::g_l;
use cuspmoment::modforms::petersson::{kloosterman_cutoff, petersson_geometric_side};
use cuspmoment::modforms::{eigensystems, store, Eigensystem};
use cuspmoment::moments::{compare, lhs_direct, lhs_petersson, MomentParams, MomentReport};
use cuspmoment::recipe::{identity_sweep, GammaMode};
use cuspmoment::report::{to_json, write_csv};
use cuspmoment::{arith, SmoothWeight};
use serde::Serialize;
use serde_json::{json, Value};

use config::{parse_shifts, Format, RunConfig};

/// Largest identity-sweep residual accepted by `identity-check`.
const IDENTITY_LIMIT: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "cuspmoment", version, about = "Twisted moments of Hecke Dirichlet polynomials: both sides, computed independently")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Compute and store the Hecke eigensystems of weight k up to N.
    Eigensystems,
    /// Kloosterman sum S(m, n; c) and the Kloosterman–Bessel side of the trace formula.
    Kloosterman,
    /// Regularized Euler product G_l(A).
    Gl,
    /// Left side of the moment, from the trace formula and (if stored) from eigenforms.
    Moment,
    /// Full comparison of the moment with the recipe's 0- and 1-swap terms.
    Compare,
    /// Randomized check of the one-swap residue identity.
    IdentityCheck,
    /// `compare` over a grid of lengths X.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eigensystems => "eigensystems",
            Command::Kloosterman => "kloosterman",
            Command::Gl => "gl",
            Command::Moment => "moment",
            Command::Compare => "compare",
            Command::IdentityCheck => "identity-check",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(clap::Args, Debug, Default)]
struct Opts {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective config as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[arg(long, global = true)]
    k: Option<u32>,
    #[arg(long, global = true)]
    l: Option<u64>,
    #[arg(long, global = true)]
    x: Option<f64>,
    /// Comma-separated shifts such as "0.1,0.15" or "0.05+0.05i,0.08-0.03i".
    #[arg(long, global = true, allow_hyphen_values = true)]
    shifts: Option<String>,
    /// Eigenvalue bound N (eigensystems) or second Kloosterman index.
    #[arg(long, global = true)]
    n: Option<u64>,
    #[arg(long, global = true)]
    m: Option<u64>,
    #[arg(long, global = true)]
    c: Option<u64>,
    /// Comma-separated lengths for `sweep`.
    #[arg(long, global = true)]
    x_grid: Option<String>,
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<GammaMode>,
    /// Include every swap subset (outside the theorem).
    #[arg(long, global = true)]
    exploratory: bool,
    #[arg(long, global = true)]
    prime_cutoff: Option<u64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Flip one sign in the identity evaluation (checks that the check can fail).
    #[arg(long, global = true, hide = true)]
    inject_sign_fault: bool,
}

fn parse_mode(s: &str) -> Result<GammaMode, String> {
    match s {
        "exact-gamma" => Ok(GammaMode::ExactGamma),
        "power-approximation" | "power" => Ok(GammaMode::PowerApproximation),
        _ => Err(format!("unknown mode {s:?}; use exact-gamma or power-approximation")),
    }
}

/// A failed run: message and exit code.
struct Failure(String, u8);

impl From<cuspmoment::Error> for Failure {
    fn from(e: cuspmoment::Error) -> Self {
        let code = if e.is_precondition() { 2 } else { 3 };
        Failure(e.to_string(), code)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(msg.into(), 2)
}

fn effective_config(command: Command, opts: &Opts) -> Result<RunConfig, Failure> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text).map_err(usage)?
        }
        None => RunConfig::default(),
    };
    cfg.command = command.name().to_string();
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = opts.$field {
                cfg.$field = v;
            }
        };
    }
    set!(k);
    set!(l);
    set!(x);
    set!(n);
    set!(m);
    set!(c);
    set!(mode);
    set!(seed);
    set!(samples);
    set!(threads);
    if let Some(s) = &opts.shifts {
        cfg.shifts = parse_shifts(s).map_err(usage)?;
    }
    if let Some(g) = &opts.x_grid {
        cfg.x_grid = g
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad X in --x-grid: {t:?}"))))
            .collect::<Result<_, _>>()?;
    }
    if opts.exploratory {
        cfg.exploratory = true;
    }
    if let Some(p) = opts.prime_cutoff {
        cfg.policy.prime_cutoff = p;
    }
    if let Some(e) = opts.epsilon {
        cfg.policy.epsilon = e;
    }
    if let Some(f) = opts.format {
        cfg.output.format = f;
    }
    if let Some(p) = &opts.out {
        cfg.output.path = p.display().to_string();
    }
    Ok(cfg)
}

fn cache_dir() -> PathBuf {
    std::env::var_os("CUSPMOMENT_CACHE").map_or_else(|| PathBuf::from("cuspmoment-cache"), PathBuf::from)
}

fn weight_function(id: &str) -> Result<SmoothWeight, Failure> {
    match id {
        "bump" => Ok(SmoothWeight::bump()),
        "standard-bump" => Ok(SmoothWeight::standard_bump()),
        _ => Err(usage(format!("unknown weight function {id:?}; use bump or standard-bump"))),
    }
}

/// `value` as a JSON object with the effective config added under `config`.
fn with_config<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<Value, Failure> {
    let mut v = serde_json::to_value(value).map_err(|e| Failure(e.to_string(), 3))?;
    let c = serde_json::to_value(cfg).map_err(|e| Failure(e.to_string(), 3))?;
    match &mut v {
        Value::Object(map) => {
            map.insert("config".to_string(), c);
        }
        _ => v = json!({ "config": c, "result": v }),
    }
    Ok(v)
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match cfg.out_path() {
        Some(path) => fs::write(&path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure(e.to_string(), 3))?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<(), Failure> {
    let v = with_config(cfg, value)?;
    emit(cfg, &to_json(&v)?)
}

fn emit_reports(cfg: &RunConfig, reports: &[MomentReport], single: bool) -> Result<(), Failure> {
    match cfg.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, reports)?;
            emit(cfg, &String::from_utf8(buf).expect("csv is utf-8"))
        }
        Format::Json if single => emit_json(cfg, &reports[0]),
        Format::Json => emit_json(cfg, &json!({ "reports": reports })),
    }
}

fn moment_params(cfg: &RunConfig, x: f64) -> Result<MomentParams, Failure> {
    Ok(MomentParams {
        k: cfg.k,
        l: cfg.l,
        x,
        shifts: cfg.shift_set()?,
        psi: cfg.psi.clone(),
        policy: cfg.policy.clone(),
        mode: cfg.mode,
        exploratory: cfg.exploratory,
    })
}

/// The weight-k family covering `n ≤ need`; weights without forms need no store.
fn family(k: u32, need: u64) -> Result<Vec<Eigensystem>, Failure> {
    if k % 2 == 1 || k < 12 {
        return Err(usage(format!("weight k = {k} must be even and at least 12")));
    }
    if cuspmoment::modforms::cusp_dimension(k) == 0 {
        return Ok(Vec::new());
    }
    Ok(store::find(&cache_dir(), k, need.max(2) as usize)?)
}

fn run(command: Command, cfg: &RunConfig, fault: bool) -> Result<u8, Failure> {
    match command {
        Command::Eigensystems => {
            let systems = eigensystems(cfg.k, cfg.n as usize)?;
            if systems.is_empty() {
                eprintln!("warning: S_{}(1) is zero; writing an empty store", cfg.k);
            }
            let path = store::save(&cache_dir(), cfg.k, cfg.n as usize, &systems)?;
            let omegas: Vec<f64> = systems.iter().map(|f| f.omega).collect();
            emit_json(
                cfg,
                &json!({ "store": path.display().to_string(), "k": cfg.k, "n": cfg.n, "dim": systems.len(), "harmonic_weights": omegas }),
            )?;
        }
        Command::Kloosterman => {
            if cfg.m == 0 || cfg.n == 0 {
                return Err(usage("kloosterman needs --m and --n at least 1"));
            }
            let single = if cfg.c > 0 { Some(arith::kloosterman(cfg.m as i64, cfg.n as i64, cfg.c)?) } else { None };
            let (side, tail) = petersson_geometric_side(cfg.m, cfg.n, cfg.k, cfg.policy.kloosterman_tol)?;
            let cutoff = kloosterman_cutoff((cfg.m * cfg.n) as f64, cfg.k, cfg.policy.kloosterman_tol);
            emit_json(
                cfg,
                &json!({ "m": cfg.m, "n": cfg.n, "c": cfg.c, "kloosterman_sum": single,
                         "geometric_side": side, "c_cutoff": cutoff, "c_tail": tail }),
            )?;
        }
        Command::Gl => {
            let v = g_l(cfg.l, &cfg.shift_set()?, &cfg.policy)?;
            emit_json(cfg, &v)?;
        }
        Command::Moment => {
            let psi = weight_function(&cfg.psi)?;
            let a = cfg.shift_set()?;
            let pet = lhs_petersson(cfg.l, cfg.x, &a, cfg.k, &psi, &cfg.policy)?;
            let need = cfg.l.max(cfg.x.ceil() as u64);
            let direct = match family(cfg.k, need) {
                Ok(fam) => Some(lhs_direct(cfg.l, cfg.x, &a, cfg.k, &psi, &fam)?),
                Err(Failure(msg, 2)) => {
                    eprintln!("note: {msg}; reporting the trace-formula value only");
                    None
                }
                Err(e) => return Err(e),
            };
            emit_json(cfg, &json!({ "lhs_direct": direct, "lhs_petersson": pet }))?;
        }
        Command::Compare => {
            let psi = weight_function(&cfg.psi)?;
            let fam = family(cfg.k, cfg.l.max(cfg.x.ceil() as u64))?;
            let report = compare(&moment_params(cfg, cfg.x)?, &psi, Some(&fam))?;
            emit_reports(cfg, std::slice::from_ref(&report), true)?;
        }
        Command::Sweep => {
            if cfg.x_grid.is_empty() {
                return Err(usage("sweep needs --x-grid"));
            }
            let psi = weight_function(&cfg.psi)?;
            let top = cfg.x_grid.iter().fold(0.0f64, |a, &b| a.max(b));
            let fam = family(cfg.k, cfg.l.max(top.ceil() as u64))?;
            let reports = cfg
                .x_grid
                .iter()
                .map(|&x| Ok(compare(&moment_params(cfg, x)?, &psi, Some(&fam))?))
                .collect::<Result<Vec<_>, Failure>>()?;
            emit_reports(cfg, &reports, false)?;
        }
        Command::IdentityCheck => {
            let sweep = identity_sweep(cfg.seed, cfg.samples, fault)?;
            let worst = sweep.max_residual.max(sweep.max_telescoping).max(sweep.max_b_coefficient);
            let pass = worst <= IDENTITY_LIMIT;
            emit_json(cfg, &json!({ "pass": pass, "limit": IDENTITY_LIMIT, "sweep": sweep }))?;
            if !pass {
                eprintln!("identity check failed: largest residual {worst:.3e} exceeds {IDENTITY_LIMIT:.0e}");
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = effective_config(cli.command, &cli.opts).and_then(|cfg| {
        if cli.opts.dump_config {
            print!("{}", cfg.to_toml());
            return Ok(0);
        }
        if cfg.threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build_global()
                .map_err(|e| Failure(format!("thread pool: {e}"), 3))?;
        }
        run(cli.command, &cfg, cli.opts.inject_sign_fault)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg, code)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
