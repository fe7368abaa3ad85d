//! `jointbp`: simulation, modulation, fitting and ingestion front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 1 internal
//! failure (including codes that could not be constructed).

mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jointbp_core::channel::{build_transition_table, fit_channel, raw_error_stats, Boundary, ChannelParams, OffsetHistogram};
use jointbp_core::code::{JointCode, JointCodeParams};
use jointbp_core::harness::{ingest_timestamps, read_timestamps, sweep_with, THREADS_ENV};
use jointbp_core::modulation::{run_metrics, ModulationMap, Scheme};
use jointbp_core::Error;

use config::CliConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Construction(_) | Error::Io(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

#[derive(Parser)]
#[command(name = "jointbp", version, about = "Joint local-global LDPC reconciliation workbench")]
#[command(after_help = "Set JOINTBP_THREADS to limit the number of worker threads.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the FER sweep described by a TOML config and write a CSV.
    Simulate {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output CSV path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a modulation map with its run metrics.
    Modulation {
        /// Bits per symbol.
        bits: u8,
        /// gray, balanced or identity.
        scheme: Scheme,
        /// Channel sigma used for the predicted per-bit error split.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Also write the map in text form to this file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Fit (sigma, beta) to a histogram of bin offsets.
    Fit {
        histogram: PathBuf,
        /// Bits per symbol of the frames the offsets came from.
        #[arg(long, short = 'm')]
        bits: u8,
    },
    /// Pair up detections from two timestamp files.
    Ingest {
        alice: PathBuf,
        bob: PathBuf,
        /// Frame length in timestamp units.
        #[arg(long)]
        frame_len: u64,
        #[arg(long, short = 'm')]
        bits: u8,
        /// Where to write the `alice bob` bin pairs.
        #[arg(long, default_value = "pairs.txt")]
        output: PathBuf,
        /// Also write the offset histogram (input for `fit`).
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Construct a code and print (or write) its text form.
    CodeDump {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: u8,
        #[arg(long)]
        w: u8,
        #[arg(long, default_value_t = 0.5)]
        rate: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        local_vn_degree: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn cached_code(dir: &Path, params: &JointCodeParams) -> jointbp_core::Result<JointCode> {
    let name = format!(
        "code_N{}_M{}_W{}_r{}_a{}_d{}_s{}.txt",
        params.n, params.m, params.w, params.rate, params.alpha, params.local_vn_degree, params.seed
    );
    let path = dir.join(name);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(code) = JointCode::from_text(&text) {
            if code.params() == params {
                return Ok(code);
            }
        }
    }
    let code = JointCode::build(params)?;
    fs::create_dir_all(dir)?;
    fs::write(&path, code.to_text())?;
    Ok(code)
}

fn cmd_simulate(path: &Path, seed: Option<u64>, output: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = CliConfig::load(path)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = output {
        cfg.output = o;
    }
    let exp = cfg.experiment()?;
    if let Some(p) = &cfg.modulation_export {
        write_file(p, &ModulationMap::build(exp.modulation, exp.m)?.to_text())?;
    }
    let cache = cfg.code_cache_dir.clone();
    let outcome = sweep_with(&exp, |p| match &cache {
        Some(dir) => cached_code(dir, p),
        None => JointCode::build(p),
    })?;
    write_file(&cfg.output, &outcome.to_csv(cfg.timing))?;
    for r in &outcome.records {
        println!(
            "alpha={} (achieved {:.4}) sigma={} ({:.2} dB) beta={} fer={} [{:.4}, {:.4}] errors={}/{} iters={:.2} wall={:.1}s",
            r.alpha,
            r.achieved_alpha,
            r.sigma,
            r.sigma_db(),
            r.beta,
            r.fer,
            r.ci_lo,
            r.ci_hi,
            r.frame_errors,
            r.trials,
            r.mean_iters,
            r.wall_s
        );
    }
    for f in &outcome.failures {
        match f.sigma {
            Some(s) => eprintln!("error: alpha={} sigma={s}: {}", f.alpha, f.message),
            None => eprintln!("error: alpha={}: {}", f.alpha, f.message),
        }
    }
    println!("wrote {}", cfg.output.display());
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Internal(format!("{} point(s) failed", outcome.failures.len())))
    }
}

fn cmd_modulation(bits: u8, scheme: Scheme, sigma: f64, beta: f64, export: Option<PathBuf>) -> Result<(), CliError> {
    let map = ModulationMap::build(scheme, bits)?;
    println!("# {scheme} modulation, M = {bits}");
    print!("{}", map.to_text());
    let rm = run_metrics(&map);
    println!("runs per level: {:?}", rm.runs);
    println!("transitions per level: {:?}", rm.transitions);
    println!("max transitions: {}", rm.max_transitions());
    println!("LSB transitions: {}", rm.lsb_transitions());
    let table = build_transition_table(&ChannelParams::new(bits, sigma, beta, Boundary::Cyclic)?)?;
    let stats = raw_error_stats(&table, &map)?;
    println!("raw symbol error rate (sigma={sigma}, beta={beta}): {:.6}", stats.raw_symbol_error_rate);
    let split: Vec<String> = stats.per_bit_error_rate.iter().map(|p| format!("{p:.6}")).collect();
    println!("per-bit error rate, level 1 first: [{}]", split.join(", "));
    if let Some(p) = export {
        write_file(&p, &map.to_text())?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_fit(path: &Path, bits: u8) -> Result<(), CliError> {
    let hist = OffsetHistogram::from_text(&read_input(path)?)?;
    let fit = fit_channel(&hist, bits)?;
    println!("samples: {}", fit.samples);
    println!("sigma: {}", fit.params.sigma);
    println!("beta: {}", fit.params.beta);
    println!("gaussian weight: {:.6}", fit.gaussian_weight);
    println!("log-likelihood: {:.6}", fit.log_likelihood);
    println!("total variation: {:.6}", fit.tv_distance);
    if fit.degenerate {
        println!("note: a single offset value; sigma is at its lower bound");
    }
    Ok(())
}

fn cmd_ingest(
    alice: &Path,
    bob: &Path,
    frame_len: u64,
    bits: u8,
    output: &Path,
    histogram: Option<PathBuf>,
) -> Result<(), CliError> {
    let a = read_timestamps(&read_input(alice)?)?;
    let b = read_timestamps(&read_input(bob)?)?;
    let (batch, stats) = ingest_timestamps(&a, &b, frame_len, bits)?;
    write_file(output, &batch.to_text())?;
    println!("total frames: {}", stats.total_frames);
    println!("effective frames: {}", stats.effective);
    println!("discarded: {}", stats.discarded());
    println!("  empty: {}", stats.empty);
    println!("  multiple detections: {}", stats.multiple);
    println!("  one side only: {}", stats.unpaired);
    if batch.is_empty() {
        eprintln!("warning: no effective frames");
    }
    if let Some(h) = histogram {
        write_file(&h, &batch.offset_histogram().to_text())?;
    }
    println!("wrote {}", output.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, seed, output } => cmd_simulate(&config, seed, output),
        Command::Modulation {
            bits,
            scheme,
            sigma,
            beta,
            export,
        } => cmd_modulation(bits, scheme, sigma, beta, export),
        Command::Fit { histogram, bits } => cmd_fit(&histogram, bits),
        Command::Ingest {
            alice,
            bob,
            frame_len,
            bits,
            output,
            histogram,
        } => cmd_ingest(&alice, &bob, frame_len, bits, &output, histogram),
        Command::CodeDump {
            n,
            m,
            w,
            rate,
            alpha,
            local_vn_degree,
            seed,
            output,
        } => {
            let code = JointCode::build(&JointCodeParams {
                n,
                m,
                w,
                alpha,
                rate,
                local_vn_degree,
                seed,
            })?;
            match output {
                Some(p) => write_file(&p, &code.to_text()),
                None => {
                    print!("{}", code.to_text());
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if v.trim().parse::<usize>().map_or(true, |n| n == 0) {
            eprintln!("error: {THREADS_ENV} must be a positive integer, got {v:?}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
