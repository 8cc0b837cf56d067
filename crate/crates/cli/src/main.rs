//! `weierlift` command-line front end: evaluation grids, lifts, seminorms,
//! convergence reports, equation solves and diagnostics as CSV or JSON.

mod args;
mod commands;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weierlift::Error;

use args::{Format, OutputArgs};
use commands::Output;

#[derive(Parser, Debug)]
#[command(name = "weierlift", version, about = "Rough-path lifts above vector Weierstrass functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Truncated or full sums on a rational time grid
    Eval(commands::EvalArgs),
    /// Two-level increment over [s, t]
    Lift(commands::LiftArgs),
    /// Hölder-type seminorm estimates on dyadic grids
    Norms(commands::NormsArgs),
    /// Distances between truncated lifts and a deep reference
    Converge(commands::ConvergeArgs),
    /// Solve dY = M(Y) dW by RK4 or by the rough step
    Rde(commands::RdeArgs),
    /// Four real integrals of the complex Weierstrass pair
    Demo(commands::DemoArgs),
    /// Bound constants of the elementary integrals over a dyadic sample
    Bounds(commands::BoundsArgs),
    /// Exponent fits and non-convergence witnesses
    Holder(commands::HolderArgs),
}

impl Command {
    fn output(&self) -> &OutputArgs {
        match self {
            Command::Eval(a) => &a.output,
            Command::Lift(a) => &a.output,
            Command::Norms(a) => &a.output,
            Command::Converge(a) => &a.output,
            Command::Rde(a) => &a.output,
            Command::Demo(a) => &a.output,
            Command::Bounds(a) => &a.output,
            Command::Holder(a) => &a.output,
        }
    }

    fn run(&self) -> weierlift::Result<Output> {
        match self {
            Command::Eval(a) => commands::eval(a),
            Command::Lift(a) => commands::lift(a),
            Command::Norms(a) => commands::norms(a),
            Command::Converge(a) => commands::converge(a),
            Command::Rde(a) => commands::rde(a),
            Command::Demo(a) => commands::demo(a),
            Command::Bounds(a) => commands::bounds(a),
            Command::Holder(a) => commands::holder(a),
        }
    }
}

fn render(table: &weierlift::csvout::CsvTable, json: Option<serde_json::Value>, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv_string(),
        Format::Json => {
            let value = json.unwrap_or_else(|| commands::table_json(table));
            let mut s = serde_json::to_string_pretty(&value).expect("serializable");
            s.push('\n');
            s
        }
    }
}

fn write_output(output: Output, args: &OutputArgs) -> std::io::Result<()> {
    match output {
        Output::Table(table, json) => {
            let text = render(&table, json, args.format);
            match &args.out {
                Some(path) => std::fs::write(path, text),
                None => std::io::stdout().lock().write_all(text.as_bytes()),
            }
        }
        Output::Files(files) => {
            let dir = args.out.as_deref().unwrap_or(Path::new("."));
            std::fs::create_dir_all(dir)?;
            for (name, table) in files {
                let (name, text) = match args.format {
                    Format::Csv => (name, table.to_csv_string()),
                    Format::Json => (name.replace(".csv", ".json"), render(&table, None, Format::Json)),
                };
                let path = dir.join(&name);
                std::fs::write(&path, text)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn report(err: &Error) -> ExitCode {
    match err {
        Error::InvalidParameter { name, constraint } => eprintln!("error: invalid --{name}: {constraint}"),
        Error::StepTooLarge { .. } => eprintln!("error: invalid --step: {err}"),
        Error::ToleranceUnreachable { .. } => eprintln!("error: --tol: {err}; loosen --tol or raise --max-n"),
        other => eprintln!("error: {other}"),
    }
    match err {
        Error::ToleranceUnreachable { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command.run() {
        Ok(output) => match write_output(output, cli.command.output()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                ExitCode::from(1)
            }
        },
        Err(e) => report(&e),
    }
}
