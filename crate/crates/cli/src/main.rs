use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jumpcalc::chain::simulate_chain_path_with;
use jumpcalc::config::{parse_config, ConfigErrors, Model, RunConfig};
use jumpcalc::levy::{write_event_log, LevySampler, TruncationPolicy};
use jumpcalc::suite::{csv_row, emit_tables, run_suite, stream_seed, substream, write_json, RunOptions, TableKind, CSV_HEADER};

/// The suite shipped with the binary, used when no `--config` is given.
const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

#[derive(Parser)]
#[command(name = "jumpcalc", version, about = "Numerical checks of stochastic calculus for symmetric jump processes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Suite configuration (JSON); the shipped default suite when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed (overrides the configuration's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Reject unknown keys and detailed-balance violations (default).
    #[arg(long, global = true, overrides_with = "no_strict")]
    strict: bool,
    /// Accept unknown keys and asymmetric chains (negative controls only).
    #[arg(long = "no-strict", global = true)]
    no_strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the configuration.
    Validate,
    /// Simulate paths of one model and write their event logs.
    Simulate {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        #[arg(long)]
        horizon: Option<f64>,
        /// Small-jump cutoff for Lévy models.
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
        /// Replace small jumps by a Brownian motion.
        #[arg(long)]
        compensate: bool,
    },
    /// Run the identity suite and write report.csv and report.json.
    Verify {
        /// Run only the named checks.
        #[arg(long)]
        only: Vec<String>,
        /// Fill the `seconds` column (makes reports run-dependent).
        #[arg(long)]
        record_timings: bool,
    },
    /// Emit convergence tables as CSV.
    Tables {
        /// sigma-eps, riemann, starred or all.
        #[arg(long, default_value = "all")]
        kind: String,
    },
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn load(global: &Global) -> Result<RunConfig, anyhow::Error> {
    let text = match &global.config {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let strict = !global.no_strict || global.strict;
    let mut cfg = parse_config(&text, strict)?;
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(global: &Global, cfg: &RunConfig) -> PathBuf {
    global.out.clone().or_else(|| cfg.output.dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn verify(cfg: &RunConfig, out: &Path, only: Vec<String>, record_timings: bool) -> anyhow::Result<bool> {
    let mut csv = create(&out.join("report.csv"))?;
    writeln!(csv, "{CSV_HEADER}")?;
    csv.flush()?;
    let mut io_error = None;
    let opts = RunOptions { record_timings, only };
    let reports = run_suite(cfg, &opts, |r| {
        let status = if r.pass { "pass" } else { "FAIL" };
        let mut line = format!("{status}  {:<28} max={:.3e} mean={:.3e}", r.name, r.max_resid, r.mean_resid);
        if let Some(z) = r.z {
            line.push_str(&format!(" z={z:.2}"));
        }
        if let Some(e) = &r.error {
            line.push_str(&format!(" error: {e}"));
        }
        println!("{line}");
        // flush per check so an interrupted run keeps its rows
        if let Err(e) = writeln!(csv, "{}", csv_row(r)).and_then(|_| csv.flush()) {
            io_error.get_or_insert(e);
        }
    });
    if let Some(e) = io_error {
        return Err(e).context("writing report.csv");
    }
    let mut json = create(&out.join("report.json"))?;
    write_json(cfg.seed, &reports, &mut json)?;
    json.flush()?;
    let passed = reports.iter().filter(|r| r.pass).count();
    println!("{passed}/{} checks passed; reports in {}", reports.len(), out.display());
    Ok(passed == reports.len())
}

fn simulate(
    cfg: &RunConfig,
    out: Option<&Path>,
    model: &str,
    paths: usize,
    horizon: Option<f64>,
    policy: TruncationPolicy,
) -> anyhow::Result<()> {
    let m = cfg.models.get(model).with_context(|| format!("unknown model `{model}`"))?;
    let horizon = horizon.unwrap_or(cfg.defaults.horizon);
    let base = stream_seed(cfg.seed, &format!("simulate/{model}"));
    for p in 0..paths {
        let mut rng = ChaCha8Rng::seed_from_u64(substream(base, p as u64));
        let mut sink: Box<dyn Write> = match out {
            Some(dir) => Box::new(create(&dir.join("paths").join(format!("{model}_{p}.csv")))?),
            None => Box::new(io::stdout().lock()),
        };
        match m {
            Model::Chain(chain) => {
                let path = simulate_chain_path_with(chain, p % chain.len(), horizon, &mut rng)?;
                writeln!(sink, "t,state")?;
                writeln!(sink, "0,{}", chain.labels()[path.x0])?;
                for e in &path.events {
                    writeln!(sink, "{},{}", e.time, chain.labels()[e.state])?;
                }
                if path.killed && path.zeta <= horizon {
                    writeln!(sink, "{},cemetery", path.zeta)?;
                }
            }
            Model::RandomChain { .. } => bail!("`{model}` is drawn per check instance; simulate a fixed chain instead"),
            Model::Levy(levy) => {
                let sampler = LevySampler::new(levy, policy)?;
                let path = sampler.sample_path(&vec![0.0; levy.dim()], horizon, &mut rng)?;
                write_event_log(&path, &mut sink)?;
            }
        }
        sink.flush()?;
    }
    Ok(())
}

fn tables(cfg: &RunConfig, out: Option<&Path>, kind: &str) -> anyhow::Result<()> {
    let kinds: Vec<TableKind> = if kind == "all" { TableKind::ALL.to_vec() } else { vec![kind.parse()?] };
    for k in kinds {
        let table = emit_tables(cfg, k).with_context(|| format!("table {k}"))?;
        match out {
            Some(dir) => {
                let path = dir.join("tables").join(format!("{k}.csv"));
                let mut w = create(&path)?;
                table.write_csv(&mut w)?;
                w.flush()?;
                println!("wrote {}", path.display());
            }
            None => {
                println!("# {k}");
                table.write_csv(io::stdout().lock())?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = load(&cli.global)?;
    match cli.command {
        Command::Validate => {
            println!("ok: {} model(s), {} function(s), {} check(s)", cfg.models.len(), cfg.functions.len(), cfg.suite.len());
            Ok(true)
        }
        Command::Simulate { model, paths, horizon, epsilon, compensate } => {
            let policy = if compensate { TruncationPolicy::compensated(epsilon, 256) } else { TruncationPolicy::drop_small(epsilon) };
            simulate(&cfg, cli.global.out.as_deref(), &model, paths, horizon, policy)?;
            Ok(true)
        }
        Command::Verify { only, record_timings } => verify(&cfg, &out_dir(&cli.global, &cfg), only, record_timings),
        Command::Tables { kind } => {
            tables(&cfg, cli.global.out.as_deref(), &kind)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.global.jobs;
    let outcome = match jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(e.into()),
        },
        None => run(cli),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            if let Some(errs) = e.downcast_ref::<ConfigErrors>() {
                for issue in &errs.0 {
                    eprintln!("config error: {issue}");
                }
                ExitCode::from(EXIT_CONFIG)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_FAIL)
            }
        }
    }
}
