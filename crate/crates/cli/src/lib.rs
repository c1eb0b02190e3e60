//! Argument handling and subcommand dispatch for the `trdecomp` binary.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use trdecomp::als::{als_loop, AlsConfig};
use trdecomp::constructions::{build_t0, build_u0, build_witness_w};
use trdecomp::error::{Result, TrError};
use trdecomp::experiments::{
    linspace, run_oneloop_experiment, run_trap_experiment, write_oneloop_csv, write_trap_csv,
    write_trap_trials_csv, OneLoopExperimentConfig, TargetSpace, TrapExperimentConfig,
    DEFAULT_TRAP_EPSILON,
};
use trdecomp::io::{fmt_f64, load_tensor, load_tr, save_tensor, save_tr};
use trdecomp::tr::random_cores;

#[derive(Debug, Parser)]
#[command(
    name = "trdecomp",
    version,
    about = "Tensor-ring ALS: spurious minima and one-loop convergence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write T0, u0 and the bond-r witness cores to text files
    Construct(ConstructArgs),
    /// Run ALS on a target file and print the per-microstep trace as CSV
    Als(AlsArgs),
    /// Perturbation sweep from the spurious local minimum
    Trap(TrapArgs),
    /// One-loop convergence from random starts
    Oneloop(OneLoopArgs),
    /// Run the invariant self-check
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ConstructArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Output directory (created if missing)
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 200)]
    max_loops: usize,
    #[arg(long, default_value_t = 1e-10)]
    conv_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
}

impl SolverArgs {
    fn config(&self, seed: u64) -> AlsConfig {
        AlsConfig {
            max_loops: self.max_loops,
            conv_tol: self.conv_tol,
            rank_tol: self.rank_tol,
            seed,
        }
    }
}

#[derive(Debug, Args)]
struct AlsArgs {
    /// Target tensor file
    #[arg(long)]
    target: PathBuf,
    /// Initial cores file; random Gaussian cores of bond `--m` when absent
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the final cores here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrapArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Trials per perturbation size
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0.0)]
    c_min: f64,
    #[arg(long, default_value_t = 0.3)]
    c_max: f64,
    #[arg(long, default_value_t = 16)]
    c_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = DEFAULT_TRAP_EPSILON)]
    trap_epsilon: f64,
    /// Summary CSV path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one CSV row per trial here
    #[arg(long)]
    trials_out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Args)]
struct OneLoopArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Bond dimensions to test (repeatable); default r^(d-1) and r^(d-1) - 1
    #[arg(long)]
    m: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
    /// Distribution of the bond-r target cores
    #[arg(long, value_enum, default_value_t = Space::Full)]
    target_space: Space,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Space {
    /// Gaussian on every entry
    Full,
    /// Gaussian on the first r^2 external positions, zero beyond
    Restricted,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Process exit code for a library error: 2 for anything touching files or
/// streams, 1 otherwise.
pub fn exit_code(e: &TrError) -> i32 {
    match e {
        TrError::Io(_) | TrError::Parse { .. } | TrError::Csv(_) => 2,
        TrError::Domain(_) | TrError::Numerical(_) => 1,
    }
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if informational {
                let _ = write!(stdout, "{rendered}");
                return 0;
            }
            let _ = write!(stderr, "{rendered}");
            return 1;
        }
    };
    match run(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "trdecomp: {e}");
            exit_code(&e)
        }
    }
}

fn run(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Construct(a) => construct(&a, stdout),
        Command::Als(a) => als(&a, stdout),
        Command::Trap(a) => {
            let cfg = TrapExperimentConfig {
                d: a.d,
                r: a.r,
                n: a.n,
                c_values: linspace(a.c_min, a.c_max, a.c_steps)?,
                trials_per_c: a.trials,
                als: a.solver.config(a.seed),
                trap_epsilon: a.trap_epsilon,
                base_seed: a.seed,
            };
            cfg.validate()?;
            let report = with_threads(a.threads, || run_trap_experiment(&cfg))??;
            emit(a.out.as_deref(), stdout, |w| {
                write_trap_csv(w, &cfg, &report)
            })?;
            if let Some(path) = &a.trials_out {
                emit(Some(path), stdout, |w| {
                    write_trap_trials_csv(w, &cfg, &report)
                })?;
            }
            Ok(())
        }
        Command::Oneloop(a) => {
            let mut cfg = OneLoopExperimentConfig::new(a.d, a.r, a.n, a.trials, a.seed);
            if !a.m.is_empty() {
                cfg.m_values = a.m.clone();
            }
            cfg.rank_tol = a.rank_tol;
            cfg.target_space = match a.target_space {
                Space::Full => TargetSpace::Full,
                Space::Restricted => TargetSpace::Restricted,
            };
            cfg.validate()?;
            let report = with_threads(a.threads, || run_oneloop_experiment(&cfg))??;
            emit(a.out.as_deref(), stdout, |w| {
                write_oneloop_csv(w, &cfg, &report)
            })
        }
        Command::Verify(a) => {
            let results = trdecomp::verify::run_all(a.seed);
            let failed = results.iter().filter(|c| !c.passed).count();
            for c in &results {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(stdout, "{tag}  {}: {}", c.name, c.detail)?;
            }
            if failed > 0 {
                writeln!(stderr, "{failed} of {} checks failed", results.len())?;
                return Err(TrError::Numerical(format!(
                    "{failed} invariant checks failed"
                )));
            }
            Ok(())
        }
    }
}

fn construct(a: &ConstructArgs, stdout: &mut dyn Write) -> Result<()> {
    let (d, r, n) = (a.d, a.r, a.n);
    let t0 = build_t0(d, r, n)?;
    let u0 = build_u0(d, r, n)?;
    let w = build_witness_w(d, r, n)?;
    std::fs::create_dir_all(&a.out)?;
    let tag = format!("d{d}_r{r}_n{n}");
    let t_path = a.out.join(format!("t0_{tag}.tensor"));
    let u_path = a.out.join(format!("u0_{tag}.tr"));
    let w_path = a.out.join(format!("witness_w_{tag}.tr"));
    save_tensor(&t_path, &t0)?;
    save_tr(&u_path, &u0)?;
    save_tr(&w_path, &w)?;
    for p in [t_path, u_path, w_path] {
        writeln!(stdout, "{}", p.display())?;
    }
    Ok(())
}

fn als(a: &AlsArgs, stdout: &mut dyn Write) -> Result<()> {
    let target = load_tensor(&a.target)?;
    let u0 = match &a.init {
        Some(path) => load_tr(path)?,
        None => random_cores(a.m, target.dims(), a.seed)?,
    };
    let cfg = a.solver.config(a.seed);
    let trace = als_loop(&target, &u0, &cfg)?;
    let d = u0.order();
    writeln!(
        stdout,
        "# initial_objective={}",
        fmt_f64(trace.initial_objective)
    )?;
    writeln!(
        stdout,
        "# loops={} final_objective={}",
        trace.loops_run,
        fmt_f64(trace.final_objective())
    )?;
    writeln!(
        stdout,
        "loop,mode,objective,sigma_min,rank_deficient,loop_max_norm"
    )?;
    for (k, f) in trace.objectives.iter().enumerate() {
        let (lp, mode) = (k / d + 1, k % d + 1);
        let norm = if mode == d {
            fmt_f64(trace.loop_max_norms[lp - 1])
        } else {
            String::new()
        };
        writeln!(
            stdout,
            "{lp},{mode},{},{},{},{norm}",
            fmt_f64(*f),
            fmt_f64(trace.sigma_mins[k]),
            trace.rank_deficient[k]
        )?;
    }
    if let Some(path) = &a.out {
        save_tr(path, &trace.final_cores)?;
    }
    Ok(())
}

fn emit(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| TrError::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    Ok(f())
}
