use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use evcs::error::{Error, Result};
use evcs::fit::{fit_entangled, DEFAULT_FIT_N_MAX};
use evcs::io::{
    load_search_space, probabilities_csv, rows_csv, write_atomic, Overrides, ResultBundle, ScenarioFile,
    SearchArtifact, Table1Line, Table1Report,
};
use evcs::oracle::{oracle_joint_amplitudes_with, Convention};
use evcs::search::{evaluate_detailed, search_with_progress, TABLE1};
use evcs::simulator::{joint_amplitudes, HeraldedGrid, MIN_CAPTURED_MASS};

/// Environment variable capping the worker thread count.
const THREADS_ENV: &str = "EVCS_THREADS";
const VERIFY_TOLERANCE: f64 = 1e-8;
const VERIFY_WINDOW: usize = 8;

#[derive(Parser)]
#[command(name = "evcs", version, about = "Heralded entangled vacuum-evacuated coherent state simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args, Clone, Copy)]
struct TruncationArgs {
    /// Photon-number cap on each input expansion.
    #[arg(long)]
    trunc_in: Option<usize>,
    /// Photon-number cap on the reported heralded grid.
    #[arg(long)]
    trunc_out: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one scenario file and emit its result bundle.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        trunc: TruncationArgs,
        /// Squeezing phase.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
        /// Phase of the c beam.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        /// Also print the standard-normalization Er.
        #[arg(long)]
        standard_norm: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// json: result bundle; csv: P_nm grid.
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Recompute the five built-in reference rows.
    Table1 {
        #[command(flatten)]
        trunc: TruncationArgs,
        #[arg(long)]
        standard_norm: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Compare the combinatorial engine against state-vector propagation.
    Verify {
        scenario: PathBuf,
        /// Per-input photon cap used by both engines.
        #[arg(long, default_value_t = 12)]
        dim: usize,
        /// Negative control: flip the reflection sign in the propagator.
        #[arg(long)]
        flip_convention: bool,
    },
    /// Exhaustive grid search described by a search-space file.
    Search {
        space: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Do not stream evaluated rows to stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Fit (α, f) to a stored heralded grid or result bundle.
    Fit {
        grid: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FIT_N_MAX)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(err) = configure_threads().and_then(|_| run(cli.command)) {
        eprintln!("error: {err}");
        return ExitCode::from(err.exit_code() as u8);
    }
    ExitCode::SUCCESS
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            scenario,
            trunc,
            phi,
            theta,
            standard_norm,
            out,
            format,
        } => {
            let file = ScenarioFile::load(&scenario)?.apply(&Overrides {
                trunc_in: trunc.trunc_in,
                trunc_out: trunc.trunc_out,
                phi,
                theta,
            });
            let spec = file.to_spec()?;
            let evaluation = evaluate_detailed(&spec)?;
            let bundle = ResultBundle::new(file, &spec, evaluation);
            let r = &bundle.row;
            eprint!(
                "t2 = {:.6}  Pr = {:.4}  Pu = {:.2}%  alpha = {:.4}  f = {:.4}  Er = {:.3e}",
                r.t2,
                r.pr,
                100.0 * r.pu,
                r.alpha,
                r.f,
                r.er
            );
            if standard_norm {
                eprint!("  Er_std = {:.3e}", bundle.fit.standard_norm_er);
            }
            eprintln!();
            match format {
                Format::Json => emit(out.as_deref(), &bundle.to_json()),
                Format::Csv => emit(out.as_deref(), &probabilities_csv(&bundle.grid)),
            }
        }
        Command::Table1 {
            trunc,
            standard_norm,
            out,
            format,
        } => {
            let trunc_in = trunc.trunc_in.unwrap_or(evcs::simulator::DEFAULT_TRUNC_IN);
            let trunc_out = trunc.trunc_out.unwrap_or(evcs::simulator::DEFAULT_TRUNC_OUT);
            let lines = TABLE1
                .par_iter()
                .map(|p| {
                    let spec = p
                        .spec()?
                        .with_truncation(trunc_in, trunc_out)
                        .map_err(|e| e.context(p.name))?;
                    let evaluation = evaluate_detailed(&spec).map_err(|e| e.context(p.name))?;
                    Ok(Table1Line::new(*p, &evaluation))
                })
                .collect::<Result<Vec<_>>>()?;
            for l in &lines {
                if l.captured_mass < 0.9999 {
                    eprintln!(
                        "warning: {} keeps only {:.6} of the input norm at trunc_in = {trunc_in} (hard limit {MIN_CAPTURED_MASS})",
                        l.published.name, l.captured_mass
                    );
                }
            }
            let report = Table1Report {
                tool: evcs::io::TOOL_NAME,
                version: evcs::io::TOOL_VERSION,
                trunc_in,
                trunc_out,
                lines,
            };
            match out {
                Some(path) => {
                    print!("{}", report.to_text(standard_norm));
                    let contents = match format {
                        Format::Json => report.to_json(),
                        Format::Csv => report.to_csv(standard_norm),
                    };
                    write_atomic(&path, &contents)
                }
                None => match format {
                    Format::Json => {
                        eprint!("{}", report.to_text(standard_norm));
                        print!("{}", report.to_json());
                        Ok(())
                    }
                    Format::Csv => {
                        print!("{}", report.to_csv(standard_norm));
                        Ok(())
                    }
                },
            }
        }
        Command::Verify {
            scenario,
            dim,
            flip_convention,
        } => {
            if dim > 16 {
                return Err(Error::Config(format!("verify needs dim ≤ 16, got {dim}")));
            }
            let file = ScenarioFile::load(&scenario)?;
            let base = file.to_spec()?;
            let spec = base.with_truncation(dim, base.trunc_out.min(dim))?;
            let convention = if flip_convention {
                Convention::FlippedReflection
            } else {
                Convention::Heisenberg
            };
            let engine = joint_amplitudes(&spec)?;
            let oracle = oracle_joint_amplitudes_with(&spec, dim, convention)?;
            let window = VERIFY_WINDOW.min(dim);
            let deviation = engine.max_abs_deviation(&oracle, window);
            let pass = deviation < VERIFY_TOLERANCE;
            println!(
                "max abs deviation {deviation:.3e} over indices ≤ {window} (D = {dim}, tolerance {VERIFY_TOLERANCE:.0e}): {}",
                if pass { "PASS" } else { "FAIL" }
            );
            if pass {
                Ok(())
            } else {
                Err(Error::OracleMismatch {
                    deviation,
                    tolerance: VERIFY_TOLERANCE,
                })
            }
        }
        Command::Search {
            space,
            out,
            format,
            quiet,
        } => {
            let space = load_search_space(&space)?;
            let rows = search_with_progress(&space, |i, r| {
                if !quiet {
                    eprintln!(
                        "[{i}] beta0={} t1={} t2={:.6} Pr={:.4} Pu={:.4} alpha={:.4}",
                        r.beta0, r.t1, r.t2, r.pr, r.pu, r.alpha
                    );
                }
            })?;
            let contents = match format {
                Format::Json => SearchArtifact::new(&space, &rows).to_json(),
                Format::Csv => rows_csv(&rows),
            };
            emit(out.as_deref(), &contents)
        }
        Command::Fit { grid, n_max, out } => {
            let text = std::fs::read_to_string(&grid).map_err(|e| Error::Io(e).context(grid.display().to_string()))?;
            let grid = parse_grid(&text)?;
            let fit = fit_entangled(&grid, n_max)?;
            let mut json = serde_json::to_string_pretty(&fit).expect("fit results always serialize");
            json.push('\n');
            emit(out.as_deref(), &json)
        }
    }
}

/// Accepts a bare grid document or a result bundle containing one.
fn parse_grid(text: &str) -> Result<HeraldedGrid> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let value = match value.get("grid") {
        Some(grid) => grid.clone(),
        None => value,
    };
    serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))
}
