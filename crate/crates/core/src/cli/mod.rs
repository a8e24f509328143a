//! The `sqe` command line.
//!
//! Exit codes: 0 success, 1 a `--check` or `check` failure, 2 invalid
//! configuration or parameters, 3 numerical abort or rejection sampler
//! collapse, 4 I/O failure.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::CommandKind;
use config::{keys_help, Settings};
use output::{write_plot_stub, Table};

use crate::acceptance::{evaluate, AcceptanceOptions, CRITERIA};
use crate::error::{Result, SqeError};

#[derive(Parser, Debug)]
#[command(name = "sqe", version, about = "Stochastic quantization of the exponential field model on the 2-torus")]
#[command(after_long_help = keys_help())]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override a key; repeatable, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory.
    #[arg(long, global = true, env = "SQE_OUT_DIR", default_value = "sqe-out")]
    out: PathBuf,

    /// Exit with status 1 when the command's pass condition fails.
    #[arg(long, global = true)]
    check: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sample the cutoff free field and compare mode variances to 1/(1+|l|^2).
    SampleGff,
    /// Integrate the Galerkin SDE and record norms (and optional snapshots).
    Simulate,
    /// Coupled runs over N = n_min..n_max+1; sup-in-time H^{-beta} gaps.
    ConvergeN,
    /// Monte Carlo checks of Wick exponentials, Wick powers and the oracle.
    VerifyWick,
    /// The S_N statistic across N with a geometric fit, for each epsilon.
    SnDecay,
    /// Gibbs invariance of cylindrical observables under the dynamics.
    Invariance,
    /// Integration-by-parts defect of the Dirichlet form.
    Ibp,
    /// Comparison bound of the remainder for a one-signed measure.
    Comparison,
    /// Monotonicity of the arctan contraction functional.
    Contraction,
    /// Run acceptance criteria and write a machine-readable report.
    Check {
        /// Comma-separated criterion ids; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
}

impl Cmd {
    fn kind(&self) -> Option<CommandKind> {
        Some(match self {
            Cmd::SampleGff => CommandKind::SampleGff,
            Cmd::Simulate => CommandKind::Simulate,
            Cmd::ConvergeN => CommandKind::ConvergeN,
            Cmd::VerifyWick => CommandKind::VerifyWick,
            Cmd::SnDecay => CommandKind::SnDecay,
            Cmd::Invariance => CommandKind::Invariance,
            Cmd::Ibp => CommandKind::Ibp,
            Cmd::Comparison => CommandKind::Comparison,
            Cmd::Contraction => CommandKind::Contraction,
            Cmd::Check { .. } => return None,
        })
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &SqeError) -> i32 {
    match e {
        SqeError::NumericAbort { .. } | SqeError::AcceptanceCollapse { .. } => 3,
        SqeError::Io(_) | SqeError::Snapshot { .. } => 4,
        _ => 2,
    }
}

/// Runs `kind` with resolved settings, on a dedicated pool when `threads > 0`.
pub fn run_command(kind: CommandKind, settings: &Settings, out: &Path) -> Result<Option<bool>> {
    let threads = settings.usize("threads")?;
    if threads == 0 {
        return kind.run(settings, out);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SqeError::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| kind.run(settings, out))
}

fn run_check(ids: &[u8], settings: &Settings, out: &Path) -> Result<bool> {
    let ids: Vec<u8> = if ids.is_empty() {
        CRITERIA.iter().map(|(i, _)| *i).collect()
    } else {
        ids.to_vec()
    };
    if let Some(bad) = ids.iter().find(|i| !CRITERIA.iter().any(|(c, _)| c == *i)) {
        return Err(SqeError::InvalidConfig(format!("no criterion {bad}")));
    }
    let opts = AcceptanceOptions {
        seed: settings.u64("seed")?,
        ..AcceptanceOptions::default()
    };
    let mut t = Table::new(
        "check",
        &[
            ("id", "criterion number"),
            ("name", "criterion name"),
            ("passed", "pass/fail"),
            ("seconds", "wall time"),
            ("detail", "measured values"),
        ],
    );
    let mut all = true;
    for id in ids {
        let o = evaluate(id, &opts);
        println!("{}", o.line());
        all &= o.passed;
        t.push(vec![
            u64::from(o.id).into(),
            o.name.into(),
            o.passed.into(),
            o.seconds.into(),
            format!("\"{}\"", o.detail.replace('"', "'")).into(),
        ]);
    }
    std::fs::create_dir_all(out)?;
    let preamble = format!("# sqe {} check\n# seed = {}\n", env!("CARGO_PKG_VERSION"), opts.seed);
    t.write(out, &preamble)?;
    write_plot_stub(out, "check", &[&t])?;
    Ok(all)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let (defaults, kind) = match &cli.command {
        Cmd::Check { .. } => (&[][..], None),
        c => {
            let k = c.kind().expect("artifact command");
            (k.defaults(), Some(k))
        }
    };
    let settings = Settings::from_file_and_overrides(defaults, cli.config.as_deref(), &cli.set)?;
    match (kind, &cli.command) {
        (Some(k), _) => {
            let verdict = run_command(k, &settings, &cli.out)?;
            eprintln!("wrote {} artifacts to {}", k.name(), cli.out.display());
            match verdict {
                Some(ok) if cli.check => {
                    println!("{} {}", if ok { "PASS" } else { "FAIL" }, k.name());
                    Ok(if ok { 0 } else { 1 })
                }
                None if cli.check => {
                    println!("{}: no pass condition", k.name());
                    Ok(0)
                }
                _ => Ok(0),
            }
        }
        (None, Cmd::Check { criteria }) => Ok(if run_check(criteria, &settings, &cli.out)? { 0 } else { 1 }),
        (None, _) => unreachable!("only check lacks a kind"),
    }
}

/// Entry point of the `sqe` binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Small configurations used by the determinism comparison.
fn determinism_cases() -> Vec<(CommandKind, &'static [&'static str])> {
    use CommandKind::*;
    vec![
        (SampleGff, &["replicas=64", "N=1", "snapshots=true"]),
        (Simulate, &["replicas=3", "N=1", "T=0.05", "output_every=10", "snapshots=true"]),
        (ConvergeN, &["seeds=2", "n_max=2", "T=0.02", "output_every=5"]),
        (VerifyWick, &["replicas=64", "radii=1,4", "alphas=0.5", "powers=2", "N=1"]),
        (SnDecay, &["replicas=8", "n_max=2", "bootstrap=16", "T=0.02", "epsilons=0.1"]),
        (Invariance, &["replicas=16", "T=0.01"]),
        (Ibp, &["replicas=64"]),
        (Comparison, &["seeds=2", "T=0.05"]),
        (Contraction, &["seeds=2", "T=0.05"]),
    ]
}

fn dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    for e in std::fs::read_dir(dir)? {
        let e = e?;
        files.push((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path())?));
    }
    files.sort();
    Ok(files)
}

/// Runs every artifact subcommand twice with the same seed, once on one
/// thread and once on two, and reports whether all outputs are
/// byte-identical. `dir` is created and removed.
pub fn determinism_report(seed: u64, dir: &Path) -> Result<Vec<(String, bool)>> {
    let mut report = Vec::new();
    for (kind, extra) in determinism_cases() {
        let mut outs = Vec::new();
        for threads in [1, 2] {
            let mut over: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
            over.push(format!("seed={seed}"));
            over.push(format!("threads={threads}"));
            let s = Settings::from_file_and_overrides(kind.defaults(), None, &over)?;
            let out = dir.join(format!("t{threads}")).join(kind.name());
            run_command(kind, &s, &out)?;
            outs.push(dir_bytes(&out)?);
        }
        report.push((kind.name().to_string(), !outs[0].is_empty() && outs[0] == outs[1]));
    }
    std::fs::remove_dir_all(dir)?;
    Ok(report)
}
