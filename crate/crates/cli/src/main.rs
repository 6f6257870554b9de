use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frrd::config::RunConfig;
use frrd::study::{base_scheme, run_study, StudyError};
use frrd::verify::{self, Suite, VerifyOptions};
use serde::Serialize;

const EXIT_ERROR: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "frrd", about = "Flux reconstruction residual distribution runs and invariant checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for reports and CSV output.
    #[arg(long, global = true, default_value = "frrd-out")]
    output_dir: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Multiplies every invariant tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every refinement level and write report.json, levels.csv and elements.csv.
    Run { config: PathBuf },
    /// Run one invariant battery, or all of them, on randomized states.
    Verify {
        config: PathBuf,
        /// conservation, correction-admissibility, entropy-cs, entropy-st, tadmor, identities or all.
        #[arg(long)]
        suite: String,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    for r in rows {
        w.serialize(r).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    w.flush().map_err(|e| format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn study_code(e: &StudyError) -> u8 {
    if e.is_divergence() {
        EXIT_DIVERGED
    } else if e.is_invariant_violation() {
        EXIT_VIOLATION
    } else {
        EXIT_ERROR
    }
}

fn run(cli: &Cli, config: &Path) -> ExitCode {
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_ERROR, e),
    };
    let out = match run_study(&cfg, cli.seed, cli.tol_scale) {
        Ok(o) => o,
        Err(e) => return fail(study_code(&e), e),
    };
    if let Err(e) = fs::create_dir_all(&cli.output_dir) {
        return fail(EXIT_ERROR, format!("{}: {e}", cli.output_dir.display()));
    }
    let dir = &cli.output_dir;
    let written = write_json(&dir.join("report.json"), &out.report)
        .and_then(|_| write_csv(&dir.join("levels.csv"), &out.level_rows()))
        .and_then(|_| write_csv(&dir.join("elements.csv"), &out.elements));
    if let Err(e) = written {
        return fail(EXIT_ERROR, e);
    }
    let r = &out.report;
    println!("case {} ({} k={} {} {} {})", r.case, r.law, r.degree, r.variant, r.flux, r.backend);
    for (l, row) in r.levels.iter().zip(out.level_rows()) {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
        let ord = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
        println!(
            "level {} elements {:>6} iters {:>6} {:?} l2 {} (order {}) entropy {:.3e} (order {})",
            l.level,
            l.elements,
            l.iterations,
            l.termination,
            fmt(l.l2_error),
            ord(row.l2_order),
            l.fr_entropy_defect,
            ord(row.entropy_order),
        );
    }
    if r.violations.is_empty() {
        println!("all invariants within tolerance; output in {}", dir.display());
        ExitCode::SUCCESS
    } else {
        for v in &r.violations {
            eprintln!("violation: {v}");
        }
        ExitCode::from(EXIT_VIOLATION)
    }
}

fn verify_cmd(cli: &Cli, config: &Path, suite: &str) -> ExitCode {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        match suite.parse() {
            Ok(s) => vec![s],
            Err(e) => return fail(EXIT_ERROR, e),
        }
    };
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_ERROR, e),
    };
    let scheme = match base_scheme(&cfg) {
        Ok(s) => s,
        Err(e) => return fail(study_code(&e), e),
    };
    let options = VerifyOptions {
        draws: cfg.verify.draws,
        seed: cli.seed,
        tol_scale: cli.tol_scale,
        amplitude: cfg.verify.amplitude,
    };
    if let Err(e) = fs::create_dir_all(&cli.output_dir) {
        return fail(EXIT_ERROR, format!("{}: {e}", cli.output_dir.display()));
    }
    let mut pass = true;
    for s in suites {
        let report = match verify::run(&scheme, s, &options) {
            Ok(r) => r,
            Err(e) => return fail(EXIT_VIOLATION, format!("{s}: {e}")),
        };
        println!("suite {s}: {}", if report.pass() { "pass" } else { "FAIL" });
        for c in &report.checks {
            println!("  {c}");
        }
        for k in &report.skipped {
            println!("  SKIP {k}");
        }
        pass &= report.pass();
        if let Err(e) = write_json(&cli.output_dir.join(format!("verify_{s}.json")), &report) {
            return fail(EXIT_ERROR, e);
        }
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VIOLATION)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.tol_scale > 0.0 && cli.tol_scale.is_finite()) {
        return fail(EXIT_ERROR, "--tol-scale must be positive and finite");
    }
    match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::Verify { config, suite } => verify_cmd(&cli, config, suite),
    }
}
