use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ivforge::exactnum::is_prime;
use ivforge::facto::{enumerate_factorizations_with, lengths_multiset, DEFAULT_MAX_STEPS};
use ivforge::forge::{forge_witness_with, ForgeParams};
use ivforge::gridcomb::{search_family, GridShape, SearchParams};
use ivforge::verify::{certificates_outcome, check_bundle_with, CheckOptions};
use ivforge::{json, Error};

#[derive(Parser)]
#[command(name = "ivforge", version, about = "Integer-valued polynomials with prescribed sets of lengths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a witness bundle for (p, lengths).
    Forge(SearchArgs),
    /// List the factorizations of a bundle.
    Enumerate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1 << 20)]
        exhaustive_cap: u64,
    },
    /// Verify a bundle, and optionally a certificate file.
    Check {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        certs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1 << 20)]
        exhaustive_cap: u64,
    },
    /// Search for a valuation array family only.
    SearchArrays(SearchArgs),
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, value_delimiter = ',', required = true)]
    lengths: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    entry_cap: u64,
    #[arg(long, default_value_t = 100_000)]
    max_rounds: u64,
    #[arg(long, default_value_t = 1 << 20)]
    exhaustive_cap: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SearchArgs {
    fn validate(&self) -> Result<Vec<usize>, Failure> {
        if !is_prime(self.p) {
            return Err(Failure::Input("p must be prime".into()));
        }
        if self.lengths.iter().any(|&n| n < 2) {
            return Err(Failure::Input("lengths must exceed 1".into()));
        }
        let mut lengths = self.lengths.clone();
        lengths.sort_unstable();
        Ok(lengths)
    }

    fn search(&self) -> SearchParams {
        SearchParams {
            entry_cap: self.entry_cap,
            max_rounds: self.max_rounds,
            exhaustive_cap: self.exhaustive_cap,
            ..SearchParams::default()
        }
    }
}

enum Failure {
    Input(String),
    Capacity(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(_) | Error::Parse(_) => Failure::Input(e.to_string()),
            Error::Capacity(_) | Error::SearchExhausted { .. } => Failure::Capacity(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<serde_json::Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(json::parse(&text)?)
}

fn write(path: Option<&Path>, value: &serde_json::Value) -> Result<(), Failure> {
    let text = json::render(value);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Progress lines go to stdout only when the artifact goes to a file.
fn note(to_file: bool, msg: &str) {
    if to_file {
        println!("{msg}");
    } else {
        eprintln!("{msg}");
    }
}

fn braces(lengths: &[usize]) -> String {
    let items: Vec<String> = lengths.iter().map(|n| n.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Forge(args) => {
            let lengths = args.validate()?;
            let params = ForgeParams { search: args.search(), ..ForgeParams::default() };
            let bundle = forge_witness_with(args.p, &lengths, args.seed, &params)?;
            write(args.out.as_deref(), &json::bundle_to_json(&bundle))?;
            note(
                args.out.is_some(),
                &format!(
                    "deg H = {}, e = {}, sigma = {}, q = {}, factors = {}",
                    bundle.h_numerator.degree().unwrap_or(0),
                    bundle.e,
                    bundle.sigma,
                    bundle.q(),
                    bundle.factors.len()
                ),
            );
        }
        Command::Enumerate { bundle, out, exhaustive_cap } => {
            let bundle = json::bundle_from_json(&read(&bundle)?)?;
            let certs = enumerate_factorizations_with(&bundle, exhaustive_cap, DEFAULT_MAX_STEPS)?;
            write(out.as_deref(), &json::certificates_to_json(&bundle, &certs))?;
            note(out.is_some(), &braces(&lengths_multiset(&certs)));
        }
        Command::Check { bundle, certs, out, exhaustive_cap } => {
            let bundle = json::bundle_from_json(&read(&bundle)?)?;
            let mut report = check_bundle_with(&bundle, &CheckOptions { exhaustive_cap })?;
            if let Some(path) = certs {
                let certs = json::certificates_from_json(&bundle, &read(&path)?)?;
                report.checks.push(certificates_outcome(&bundle, &certs)?);
            }
            write(out.as_deref(), &json::report_to_json(&report))?;
            for c in &report.checks {
                note(out.is_some(), &format!("{:<28} {}", c.name, if c.passed { "pass" } else { "FAIL" }));
            }
            if !report.passed() {
                return Err(Failure::Verification);
            }
        }
        Command::SearchArrays(args) => {
            let lengths = args.validate()?;
            let shape = GridShape::new(lengths)?;
            let q = usize::try_from(args.p).map_err(|_| Failure::Input("p too large".into()))?;
            let found = search_family(&shape, q, args.seed, &args.search())?;
            write(args.out.as_deref(), &json::family_with_transcript(&found.family, &found.report, found.round))?;
            let totals: Vec<u64> = (1..=q).map(|s| found.family.total(s)).collect();
            note(args.out.is_some(), &format!("found at round {}, array total {}", found.round, totals[0]));
        }
    }
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("IVFORGE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Capacity(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
    }
}
