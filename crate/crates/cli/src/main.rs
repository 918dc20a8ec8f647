//! Command-line front end: run scenarios, re-render persisted results, and
//! print closed-form predictions.
//!
//! Exit codes: 0 on success, 1 for parse or schema problems (bad argv, bad
//! scenario file, bad results file), 2 for I/O failures. Diagnostics go to
//! standard error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use waveparticle::scenario::{EraserBasis, ScenarioKind};
use waveparticle::{
    from_json, oracle_eraser, oracle_mz, report_csv, report_table, run_scenario,
    to_canonical_json, FraunhoferPattern, Pol, ScenarioConfig, TwoBeamPattern,
};

#[derive(Parser)]
#[command(name = "waveparticle", version, about = "Particle-plus-field optics simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and persist the results as JSON.
    Simulate {
        /// Scenario configuration (UTF-8 JSON).
        scenario: PathBuf,
        /// Output path for the results.
        #[arg(long, default_value = "results.json")]
        out: PathBuf,
        /// Override the trial count from the scenario file.
        #[arg(long)]
        trials: Option<u64>,
        /// Override the seed from the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        /// Embed every per-trial record in the results.
        #[arg(long)]
        keep_records: bool,
    },
    /// Render a persisted results file.
    Report {
        /// Results file produced by `simulate`.
        results: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Print the closed-form prediction for a scenario.
    Oracle {
        /// Scenario configuration (UTF-8 JSON).
        scenario: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

/// Exit 1: the input could not be interpreted.
struct ParseFailure(String);
/// Exit 2: the input could not be read or the output could not be written.
struct IoFailure(String);

enum Failure {
    Parse(ParseFailure),
    Io(IoFailure),
}

impl From<ParseFailure> for Failure {
    fn from(f: ParseFailure) -> Self {
        Failure::Parse(f)
    }
}

impl From<IoFailure> for Failure {
    fn from(f: IoFailure) -> Self {
        Failure::Io(f)
    }
}

fn read_text(path: &Path) -> Result<String, IoFailure> {
    fs::read_to_string(path).map_err(|e| IoFailure(format!("{}: {e}", path.display())))
}

/// Prints to stdout, treating a closed pipe (e.g. `report ... | head`) as a
/// normal end of output rather than an error.
fn emit(text: &str) -> Result<(), IoFailure> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(IoFailure(format!("stdout: {e}"))),
    }
}

/// Writes via a temp file in the destination directory, then renames, so a
/// crash never leaves a truncated results file.
fn write_atomic(path: &Path, text: &str) -> Result<(), IoFailure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text).map_err(|e| IoFailure(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| IoFailure(format!("{}: {e}", path.display())))
}

fn load_scenario(
    path: &Path,
    trials: Option<u64>,
    seed: Option<u64>,
) -> Result<ScenarioConfig, Failure> {
    let text = read_text(path)?;
    let mut config = waveparticle::parse_scenario(&text)
        .map_err(|e| ParseFailure(format!("{}: {e}", path.display())))?;
    if let Some(trials) = trials {
        config.trials = trials;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if trials.is_some() || seed.is_some() {
        // overrides go through the same validation as the file contents
        config = ScenarioConfig::from_value(&config.to_value())
            .map_err(|e| ParseFailure(format!("{}: {e}", path.display())))?;
    }
    Ok(config)
}

fn simulate(
    scenario: &Path,
    out: &Path,
    trials: Option<u64>,
    seed: Option<u64>,
    keep_records: bool,
) -> Result<(), Failure> {
    let config = load_scenario(scenario, trials, seed)?;
    let result = run_scenario(&config, keep_records)
        .map_err(|e| ParseFailure(format!("{}: {e}", scenario.display())))?;
    let json = to_canonical_json(&result)
        .map_err(|e| ParseFailure(format!("serializing results: {e}")))?;
    write_atomic(out, &json)?;
    emit(&format!("{}results written to {}\n", report_table(&result), out.display()))?;
    Ok(())
}

fn report(results: &Path, format: Format) -> Result<(), Failure> {
    let text = read_text(results)?;
    let result =
        from_json(&text).map_err(|e| ParseFailure(format!("{}: {e}", results.display())))?;
    match format {
        Format::Csv => {
            let csv = report_csv(&result)
                .map_err(|e| ParseFailure(format!("{}: {e}", results.display())))?;
            emit(&csv)?;
        }
        Format::Table => emit(&report_table(&result))?,
    }
    Ok(())
}

fn print_oracle(scenario: &Path) -> Result<(), Failure> {
    use std::fmt::Write as _;
    let config = load_scenario(scenario, None, None)?;
    let fail = |e: waveparticle::Error| ParseFailure(format!("{}: {e}", scenario.display()));
    let mut out = String::new();
    match &config.kind {
        ScenarioKind::MachZehnder(params) => {
            let setup = match params.choice_step {
                None => params.setup,
                Some(_) => params.setup.toggled(),
            };
            let probs = oracle_mz(setup, params.arm_phase);
            let _ = writeln!(
                out,
                "mach_zehnder, effective setup {}, phase {}",
                setup.as_int(),
                params.arm_phase
            );
            let _ = writeln!(out, "P(det1) = {:.17}", probs.det1);
            let _ = writeln!(out, "P(det2) = {:.17}", probs.det2);
        }
        ScenarioKind::QuantumEraser(params) => {
            let outcomes = match params.basis {
                EraserBasis::Linear => [Pol::H, Pol::V],
                EraserBasis::Circular => [Pol::L, Pol::R],
            };
            let _ = writeln!(out, "quantum_eraser, {} basis", params.basis.as_str());
            for phase in params.phases() {
                for outcome in outcomes {
                    let probs = oracle_eraser(params.basis, outcome, phase).map_err(fail)?;
                    let _ = writeln!(
                        out,
                        "phase {phase}: P(det1 | {outcome}) = {:.17}, P(det2 | {outcome}) = {:.17}",
                        probs.det1, probs.det2
                    );
                }
                let _ = writeln!(out, "phase {phase}: pooled P(det1) = 0.5, P(det2) = 0.5");
            }
        }
        ScenarioKind::IndependentBeams(params) => {
            let pattern =
                TwoBeamPattern::new(params.angle, params.wavelength, 0.0).map_err(fail)?;
            let _ = writeln!(out, "independent_beams");
            let _ = writeln!(out, "fringe period = {:.17e} m", pattern.period());
            let _ =
                writeln!(out, "per-group visibility = 1, pooled visibility -> 0 over many groups");
        }
        ScenarioKind::DoubleSlit(params) => {
            let pattern = FraunhoferPattern::new(params.clone()).map_err(fail)?;
            let _ = writeln!(out, "double_slit");
            match pattern.fringe_spacing() {
                Some(s) => {
                    let _ = writeln!(out, "fringe spacing = {:.17e} m", s);
                }
                None => {
                    let _ = writeln!(out, "single open slit: envelope only, no fringes");
                }
            }
            let _ = writeln!(out, "envelope first zero = {:.17e} m", pattern.envelope_first_zero());
        }
    }
    emit(&out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match &cli.command {
        Command::Simulate { scenario, out, trials, seed, keep_records } => {
            simulate(scenario, out, *trials, *seed, *keep_records)
        }
        Command::Report { results, format } => report(results, *format),
        Command::Oracle { scenario } => print_oracle(scenario),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Parse(ParseFailure(message))) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Io(IoFailure(message))) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
