//! `splitkit`: validate designs, run experiments, select couplings and
//! benchmark methods.
//!
//! Exit codes: 0 success, 1 method or validation failure, 2 input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use splitkit::experiment::{run_experiment, run_suite, BenchSuite, ExperimentConfig};
use splitkit::presets::{certified_preset, crfb_design_scaled, LaplacianScale, PresetKind};
use splitkit::selection::SelectionOptions;
use splitkit::structure::{validate_assumption, DesignFile, PatternSet};
use splitkit::Error;

#[derive(Parser)]
#[command(name = "splitkit", version, about = "Reflected forward-backward splitting toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a design file (kernel, sums and causality, PSD).
    Validate {
        design: PathBuf,
        /// Cocoercivity constants; override those stored in the file.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        sigma: Option<Vec<f64>>,
        /// Lipschitz constants; override those stored in the file.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lip: Option<Vec<f64>>,
    },
    /// Run one experiment from a JSON config.
    Run { config: PathBuf },
    /// Minimize ‖Υ‖₂ over a pattern file and emit the complete-graph design.
    Select {
        patterns: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        sigma: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        lip: Option<Vec<f64>>,
        #[arg(long, default_value_t = 5000)]
        iters: usize,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, value_enum, default_value_t = Scale::Unit)]
        scale: Scale,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit a certified preset design file.
    Preset {
        kind: String,
        #[arg(long, value_delimiter = ',', required = true)]
        sigma: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        lip: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a comparison suite and print the iteration table as CSV.
    Bench {
        suite: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write every individual run as JSON.
        #[arg(long)]
        runs: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Unit,
    Coupling,
}

/// Input problems map to 2; everything the method or design got wrong to 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Io(_) | Error::Shape(_) | Error::Domain(_) => 2,
        _ => 1,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {}", e);
    ExitCode::from(exit_code(&e))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {}", p.display(), e))),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn validate(design: &Path, sigma: Option<Vec<f64>>, lip: Option<Vec<f64>>) -> Result<ExitCode, Error> {
    let loaded = DesignFile::read(design)?.into_design()?;
    let sigma = sigma.or(loaded.sigma).ok_or_else(|| Error::Parse {
        location: "field sigma".into(),
        message: "no cocoercivity constants in the file or on the command line".into(),
    })?;
    let lip = lip.or(loaded.lip).unwrap_or_default();
    let cert = validate_assumption(&loaded.design, &sigma, &lip)?;
    print!("{}", cert);
    Ok(if cert.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(config: &Path) -> Result<ExitCode, Error> {
    let config = ExperimentConfig::read(config)?;
    let outcome = run_experiment(&config)?;
    if let Some(path) = &config.trace {
        outcome.trace.write_csv(path)?;
    }
    let summary = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes") + "\n";
    write_or_print(config.summary.as_deref(), &summary)?;
    let s = &outcome.summary;
    eprintln!(
        "{} after {} iterations (residual {:.3e}{})",
        if s.converged { "converged" } else { "not converged" },
        s.iterations,
        s.final_residual,
        s.final_metric.map_or(String::new(), |m| format!(", metric {:.3e}", m))
    );
    if let Some(e) = &s.error {
        eprintln!("error: {}", e);
    }
    Ok(if s.converged && s.error.is_none() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[allow(clippy::too_many_arguments)]
fn select(
    patterns: &Path,
    sigma: Vec<f64>,
    lip: Option<Vec<f64>>,
    iters: usize,
    step: f64,
    scale: Scale,
    output: Option<&Path>,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(patterns).map_err(|e| Error::Io(format!("{}: {}", patterns.display(), e)))?;
    let patterns: PatternSet = serde_json::from_str(&text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let lip = lip.unwrap_or_default();
    let opts = SelectionOptions { step, iters };
    let scale = match scale {
        Scale::Unit => LaplacianScale::Unit,
        Scale::Coupling => LaplacianScale::Coupling,
    };
    let crfb = crfb_design_scaled(&patterns, &sigma, &lip, &opts, scale)?;
    eprintln!(
        "‖Υ‖₂ = {:.6} after {} iterations{}",
        crfb.selection.upsilon_norm,
        crfb.selection.iterations,
        if crfb.selection.converged {
            ""
        } else {
            " (still decreasing)"
        }
    );
    let file = DesignFile::from_design(&crfb.design, Some(&sigma), Some(&lip));
    write_or_print(output, &(file.to_json() + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn preset(kind: &str, sigma: Vec<f64>, lip: Vec<f64>, output: Option<&Path>) -> Result<ExitCode, Error> {
    let kind: PresetKind = kind.parse()?;
    let (design, d, lambda) = certified_preset(kind, &sigma, &lip)?;
    eprintln!("{}: d = {:.6e}, λ = {:.6e}", kind, d, lambda);
    let file = DesignFile::from_design(&design, Some(&sigma), Some(&lip));
    write_or_print(output, &(file.to_json() + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn bench(suite: &Path, output: Option<&Path>, runs: Option<&Path>) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(suite).map_err(|e| Error::Io(format!("{}: {}", suite.display(), e)))?;
    let suite = BenchSuite::parse(&text)?;
    let table = run_suite(&suite);
    for r in table.runs.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "DNF {} {} seed {}: {}",
            r.setting,
            r.method,
            r.seed,
            r.error.as_deref().unwrap_or_default()
        );
    }
    write_or_print(output, &table.to_csv())?;
    if let Some(path) = runs {
        let json = serde_json::to_string_pretty(&table.runs).expect("runs serialize") + "\n";
        write_or_print(Some(path), &json)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { design, sigma, lip } => validate(&design, sigma, lip),
        Command::Run { config } => run(&config),
        Command::Select {
            patterns,
            sigma,
            lip,
            iters,
            step,
            scale,
            output,
        } => select(&patterns, sigma, lip, iters, step, scale, output.as_deref()),
        Command::Preset {
            kind,
            sigma,
            lip,
            output,
        } => preset(&kind, sigma, lip, output.as_deref()),
        Command::Bench { suite, output, runs } => bench(&suite, output.as_deref(), runs.as_deref()),
    };
    result.unwrap_or_else(fail)
}
