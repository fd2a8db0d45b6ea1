//! finite-type: analyze polynomial domains, truncate defining functions, evaluate epsilon bounds.

use clap::{Parser, Subcommand};
use finite_type::num::parse_q;
use finite_type::parse::{parse_domain_file, parse_point, DomainSpec};
use finite_type::report::{analyze, epsilon_report, parse_budget, truncate_report, AnalyzeOptions, Report, EXIT_INVALID};
use finite_type::weights::Weight;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "finite-type", version, about = "Exact finite-type invariants and the Kohn multiplier algorithm for polynomial domains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full pipeline on a domain file.
    Analyze {
        file: PathBuf,
        /// Form degree q (overrides the file).
        #[arg(long)]
        q: Option<usize>,
        /// Base point, e.g. "(0, 1/2*i)" (overrides the file).
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 6)]
        max_steps: usize,
        /// Points per axis of the level-set grid; 0 skips the scan.
        #[arg(long, default_value_t = 11)]
        grid: usize,
        /// Degree cap for monomial radical candidates.
        #[arg(long, default_value_t = 2)]
        degree_cap: u32,
        /// Largest exponent used by curve probes.
        #[arg(long, default_value_t = 6)]
        probe_degree: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Weighted truncation of the defining function at the base point.
    Truncate {
        file: PathBuf,
        /// Weight, e.g. "(1,4)".
        #[arg(long)]
        weight: String,
        #[arg(long, default_value = "1")]
        level: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the subelliptic gain bound and the degree bounds.
    Epsilon {
        #[arg(long)]
        t: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: usize,
    },
}

fn load(path: &Path) -> Result<DomainSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e))?;
    parse_domain_file(&text).map_err(|e| format!("{}: {}", path.display(), e))
}

fn emit(rep: &Report, code: i32, output: Option<&Path>) -> ExitCode {
    for w in &rep.warnings {
        eprintln!("warning: {}", w);
    }
    if let Some(e) = &rep.error {
        eprintln!("error: {}", e);
    }
    let json = rep.to_json();
    match output {
        Some(p) => {
            if let Err(e) = std::fs::write(p, json + "\n") {
                eprintln!("error: {}: {}", p.display(), e);
                return ExitCode::from(EXIT_INVALID as u8);
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", json);
        }
    }
    ExitCode::from(code as u8)
}

fn invalid(msg: String) -> ExitCode {
    eprintln!("error: {}", msg);
    ExitCode::from(EXIT_INVALID as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let budget = match std::env::var("FINITE_TYPE_BUDGET") {
        Ok(s) => match parse_budget(&s) {
            Some(b) => Some(b),
            None => return invalid(format!("FINITE_TYPE_BUDGET={} is not a nonnegative integer", s)),
        },
        Err(_) => None,
    };
    match cli.cmd {
        Cmd::Analyze { file, q, point, max_steps, grid, degree_cap, probe_degree, output } => {
            let mut spec = match load(&file) {
                Ok(s) => s,
                Err(e) => return invalid(e),
            };
            if let Some(q) = q {
                if q < 1 || q >= spec.n {
                    return invalid(format!("--q {} outside 1..{}", q, spec.n - 1));
                }
                spec.q = q;
            }
            if let Some(p) = point {
                match parse_point(&p, spec.n) {
                    Ok(x) => spec.point = x,
                    Err(e) => return invalid(format!("--point: {}", e)),
                }
            }
            let opts = AnalyzeOptions { max_steps, grid, degree_cap, probe_degree, budget };
            let (rep, code) = analyze(&spec, &opts);
            emit(&rep, code, output.as_deref())
        }
        Cmd::Truncate { file, weight, level, output } => {
            let spec = match load(&file) {
                Ok(s) => s,
                Err(e) => return invalid(e),
            };
            let Some(w) = Weight::parse(&weight) else { return invalid(format!("--weight {}: expected a tuple like (1,4)", weight)) };
            let Some(lv) = parse_q(&level) else { return invalid(format!("--level {}: expected a rational", level)) };
            let (rep, code) = truncate_report(&spec, &w, &lv);
            emit(&rep, code, output.as_deref())
        }
        Cmd::Epsilon { t, n, q } => {
            let Some(tv) = parse_q(&t) else { return invalid(format!("--t {}: expected a rational", t)) };
            let (rep, code) = epsilon_report(&tv, n, q);
            emit(&rep, code, None)
        }
    }
}
