//! `oscm`: solve, verify, generate, characterize and benchmark one-sided
//! crossing minimization instances.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 instance parse error,
//! 3 capacity error, 4 no solution within the search budget, 5 invalid
//! solution or inconsistent benchmark.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use oscm_core::bench::{has_mismatch, render_report, run_benchmark, BenchConfig, ReportFormat};
use oscm_core::graph::{
    count_crossings, generate_random_instance, parse_instance, parse_solution, serialize_instance,
    serialize_solution, BipartiteInstance,
};
use oscm_core::limits::{default_memory_budget, Deadline};
use oscm_core::solver::{check_capacity, choose_algorithm, solve, Algorithm, SolverConfig};
use oscm_core::subexpo::characterize_instance;
use oscm_core::OscmError;

#[derive(Parser)]
#[command(name = "oscm", version, about = "One-sided crossing minimization solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the order followed by `c crossings <n>`.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the solution here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count the crossings of a solution file.
    Verify { instance: PathBuf, solution: PathBuf },
    /// Generate a random instance; every free/fixed pair is an edge with probability `p`.
    Gen {
        #[arg(long)]
        n_free: usize,
        #[arg(long)]
        n_fixed: usize,
        #[arg(long, short)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the widest active interval window and the width histogram.
    Characterize { instance: PathBuf },
    /// Run a benchmark described by a JSON config file.
    Bench {
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// auto, slow-dp, fast-dp, mitm-dp, golden, subexpo or brute.
    #[arg(long, default_value = "auto")]
    algo: Algorithm,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    /// Largest budget above the pairwise lower bound tried by golden.
    #[arg(long)]
    max_k: Option<u64>,
    /// Widest interval window subexpo accepts.
    #[arg(long)]
    width_cap: Option<usize>,
    /// Memory limit for solver tables, e.g. 512M or 4G.
    #[arg(long, value_parser = parse_bytes)]
    mem_budget: Option<u64>,
    /// Give up after this many seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let base = SolverConfig::default();
        SolverConfig {
            threads: self.threads as usize,
            max_k: self.max_k.unwrap_or(base.max_k),
            width_cap: self.width_cap.unwrap_or(base.width_cap),
            mem_budget: self.mem_budget.unwrap_or_else(default_memory_budget),
            deadline: match self.timeout {
                Some(t) => Deadline::after(Duration::from_secs_f64(t)),
                None => Deadline::none(),
            },
            ..base
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

/// Accepts a plain byte count or one with a K, M or G suffix (powers of 1024).
fn parse_bytes(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let (digits, shift) = match s.char_indices().last() {
        Some((i, 'k' | 'K')) => (&s[..i], 10),
        Some((i, 'm' | 'M')) => (&s[..i], 20),
        Some((i, 'g' | 'G')) => (&s[..i], 30),
        _ => (s, 0),
    };
    let value: u64 = digits.parse().map_err(|_| format!("`{s}` is not a byte count"))?;
    value
        .checked_mul(1 << shift)
        .ok_or_else(|| format!("`{s}` is too large"))
}

struct Failure {
    code: u8,
    message: String,
}

impl From<OscmError> for Failure {
    fn from(e: OscmError) -> Self {
        let code = match &e {
            OscmError::Parse { .. } => 2,
            OscmError::Capacity { .. } | OscmError::WindowTooWide { .. } => 3,
            OscmError::NotFound { .. } => 4,
            OscmError::InvalidSolution(_) | OscmError::InvalidPermutation(_) => 5,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        OscmError::Io(e).into()
    }
}

fn read_instance(path: &Path) -> Result<BipartiteInstance, Failure> {
    let file = File::open(path).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })?;
    parse_instance(BufReader::new(file)).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_solve(instance: &Path, args: &SolverArgs, out: Option<&Path>) -> Result<(), Failure> {
    let inst = read_instance(instance)?;
    let cfg = args.config();
    let algo = match args.algo {
        Algorithm::Auto => choose_algorithm(&inst, &cfg),
        a => a,
    };
    check_capacity(&inst, algo, &cfg).map_err(|e| {
        let mut f = Failure::from(e);
        if algo == Algorithm::FastDp {
            f.message.push_str("; mitm-dp solves the same sizes with far smaller tables (--algo mitm-dp)");
        }
        f
    })?;
    let result = solve(&inst, algo, &cfg)?;
    let mut text = serialize_solution(&inst, &result);
    text.push_str(&format!("c crossings {}\n", result.crossings));
    write_output(out, &text)
}

fn cmd_verify(instance: &Path, solution: &Path) -> Result<(), Failure> {
    let inst = read_instance(instance)?;
    let file = File::open(solution).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", solution.display()),
    })?;
    let perm = parse_solution(&inst, BufReader::new(file))?;
    println!("{}", count_crossings(&inst, &perm)?);
    Ok(())
}

fn cmd_gen(n_free: usize, n_fixed: usize, p: f64, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Failure {
            code: 1,
            message: format!("edge probability {p} is outside [0, 1]"),
        });
    }
    let inst = generate_random_instance(n_free, n_fixed, p, seed);
    write_output(out, &serialize_instance(&inst))
}

fn cmd_characterize(instance: &Path) -> Result<(), Failure> {
    let inst = read_instance(instance)?;
    let report = characterize_instance(&inst);
    let mut text = format!(
        "n_free {}\nn_fixed {}\nedges {}\nisolated {}\nmax_width {}\n",
        inst.n_free(),
        inst.n_fixed(),
        inst.edge_count(),
        report.isolated,
        report.max_width
    );
    for (w, count) in report.histogram.iter().enumerate() {
        text.push_str(&format!("width {w} {count}\n"));
    }
    write_output(None, &text)
}

fn cmd_bench(config: &Path, out: Option<PathBuf>, format: Option<Format>) -> Result<(), Failure> {
    let mut cfg = BenchConfig::load(config)?;
    if out.is_some() {
        cfg.output = out;
    }
    if let Some(f) = format {
        cfg.format = f.into();
    }
    let records = run_benchmark(&cfg)?;
    if cfg.output.is_none() {
        write_output(None, &render_report(&records, cfg.format)?)?;
    }
    if has_mismatch(&records) {
        return Err(Failure {
            code: 5,
            message: "crossing counts disagree between runs; see rows with status mismatch".into(),
        });
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            instance,
            solver,
            out,
        } => cmd_solve(&instance, &solver, out.as_deref()),
        Command::Verify { instance, solution } => cmd_verify(&instance, &solution),
        Command::Gen {
            n_free,
            n_fixed,
            p,
            seed,
            out,
        } => cmd_gen(n_free, n_fixed, p, seed, out.as_deref()),
        Command::Characterize { instance } => cmd_characterize(&instance),
        Command::Bench { config, out, format } => cmd_bench(&config, out, format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("oscm: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
