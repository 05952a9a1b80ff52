//! Command-line front end. Exit status 0 on success, 1 for usage errors and
//! 2 when validation, simulation or any other processing fails.

use crate::analysis::{linearize, optimize, Execution};
use crate::io::{
    self, export_drawing, export_equations, fmt_g17, load, load_graph, read_signals, render_report, write_history,
    write_linearization, write_trajectory, Model, ReportKind,
};
use crate::sim::{simulate, DynamicSystem, Hold};
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "gbm", version, about = "Graph-based modeling of multi-domain energy systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model and report structural errors and warnings.
    Validate { model: PathBuf },
    /// Print a tabular report.
    Report {
        model: PathBuf,
        #[arg(long, default_value = "full", value_parser = parse_kind)]
        kind: ReportKind,
    },
    /// Write a DOT drawing of the graph.
    Draw {
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Integrate a model and write the trajectory as CSV.
    Simulate {
        system: PathBuf,
        #[arg(long)]
        t_final: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        /// CSV with a time column followed by input or disturbance columns.
        #[arg(long)]
        signals: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Option<Vec<f64>>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Linearize around an operating point and write A, B and Z as CSV.
    Linearize {
        system: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        u0: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        d0: Option<Vec<f64>>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the state equations, one line per dynamic state.
    ExportEqs {
        model: PathBuf,
        /// Replace non-design parameters by their values.
        #[arg(long)]
        substitute: bool,
    },
    /// Build a system definition into a single component model file.
    Combine {
        system: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the genetic algorithm on a design problem.
    Optimize {
        problem: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        budget: usize,
        /// Evaluate candidates one at a time.
        #[arg(long)]
        sequential: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> Result<ReportKind, String> {
    s.parse()
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn with_output(path: Option<&Path>, out: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Outcome) -> Outcome {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(out),
    }
}

fn system_of(path: &Path) -> Result<(crate::graph::Graph, DynamicSystem), Failure> {
    let g = load_graph(path)?;
    let sys = DynamicSystem::from_graph(&g)?;
    Ok((g, sys))
}

fn initial_state(sys: &DynamicSystem, given: Option<Vec<f64>>) -> Result<Vec<f64>, Failure> {
    match given {
        Some(x) => Ok(x),
        None => sys
            .initial_state()
            .ok_or_else(|| Failure("model has unassigned initial conditions; pass --x0".into())),
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Validate { model } => {
            let g = load_graph(&model)?;
            let report = g.validate();
            write!(err, "{report}")?;
            if !report.is_ok() {
                return Err(Failure(format!("'{}' has {} error(s)", g.name, report.errors.len())));
            }
            writeln!(
                out,
                "ok: '{}' with {} vertices, {} edges, {} states, {} inputs",
                g.name,
                g.vertices.len(),
                g.edges.len(),
                g.total_states(),
                g.inputs.len()
            )?;
        }
        Command::Report { model, kind } => {
            out.write_all(render_report(&load_graph(&model)?, kind).as_bytes())?;
        }
        Command::Draw { model, output } => {
            let text = export_drawing(&load_graph(&model)?);
            with_output(output.as_deref(), out, |w| Ok(w.write_all(text.as_bytes())?))?;
        }
        Command::Simulate { system, t_final, dt, t0, signals, x0, output } => {
            let (_, sys) = system_of(&system)?;
            let x0 = initial_state(&sys, x0)?;
            let traj = match signals {
                Some(path) => {
                    let file = File::open(&path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
                    let schedule = read_signals(file)?.bind(&sys)?;
                    simulate(&sys, &x0, &schedule, (t0, t_final), dt)?
                }
                None => simulate(&sys, &x0, &Hold, (t0, t_final), dt)?,
            };
            for w in &traj.warnings {
                writeln!(err, "warning: {w}")?;
            }
            with_output(output.as_deref(), out, |w| Ok(write_trajectory(&traj, w)?))?;
        }
        Command::Linearize { system, x0, u0, d0, output } => {
            let (_, sys) = system_of(&system)?;
            let x0 = initial_state(&sys, x0)?;
            let u0 = u0.unwrap_or_else(|| sys.default_inputs());
            let d0 = d0.unwrap_or_else(|| sys.default_disturbances());
            let lin = linearize(&sys, &x0, &u0, &d0)?;
            for w in &lin.warnings {
                writeln!(err, "warning: {w}")?;
            }
            with_output(output.as_deref(), out, |w| Ok(write_linearization(&lin, w)?))?;
        }
        Command::ExportEqs { model, substitute } => {
            out.write_all(export_equations(&load_graph(&model)?, substitute)?.as_bytes())?;
        }
        Command::Combine { system, output } => {
            let g = match load(&system)? {
                Model::System(def) => io::build_system(&def, system.parent().unwrap_or(Path::new(".")))?,
                _ => return Err(Failure(format!("{} is not a system definition", system.display()))),
            };
            let text = io::to_string(&Model::Component(g));
            with_output(output.as_deref(), out, |w| Ok(w.write_all(text.as_bytes())?))?;
        }
        Command::Optimize { problem, seed, budget, sequential, output } => {
            let p = match load(&problem)? {
                Model::Problem(p) => p,
                _ => return Err(Failure(format!("{} is not a design problem", problem.display()))),
            };
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let result = optimize(&p, seed, budget, exec)?;
            let names: Vec<String> = p.variables().map(|v| v.name.clone()).collect();
            let summary: Vec<String> = names.iter().zip(&result.best).map(|(n, v)| format!("{n}={}", fmt_g17(*v))).collect();
            let line = format!("best J={} at {}", fmt_g17(result.best_value), summary.join(", "));
            if output.is_some() {
                writeln!(out, "{line}")?;
            } else {
                writeln!(err, "{line}")?;
            }
            with_output(output.as_deref(), out, |w| Ok(write_history(&result, &names, w)?))?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut err = std::io::stderr();
    run_with(std::env::args_os(), &mut out, &mut err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("gbm").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let (code, _, err) = call(&["validate", "x.model", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn missing_file_is_a_failure() {
        let (code, _, err) = call(&["validate", "/nonexistent/x.model"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("simulate"));
    }
}
