//! `ldl`: S-matrices, master equations, collision trajectories, correlator
//! limits and verification runs for a test particle in a dilute Bose gas.
//!
//! Exit codes: 0 success or PASS, 1 a verdict FAIL, 2 an input error.

mod args;
mod commands;
mod error;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ModelCommand};
use error::CliResult;
use manifest::{beside, manifest_value, write_manifest, Clock, Outcome, RunInfo, Verdict};

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Model(ModelCommand::Check(_)) => "model-check",
        Command::Model(ModelCommand::Demo(_)) => "model-demo",
        Command::Smatrix(_) => "smatrix",
        Command::Evolve(_) => "evolve",
        Command::Trajectories(_) => "trajectories",
        Command::Correlators(_) => "correlators",
        Command::FockVerify(_) => "fock-verify",
        Command::VerifyAll(_) => "verify-all",
    }
}

/// Manifest location when `--manifest` is not given: beside the primary
/// output, or in the working directory for stdout-only runs.
fn default_manifest(cmd: &Command) -> PathBuf {
    let out = match cmd {
        Command::Model(ModelCommand::Check(a)) => a.json.clone(),
        Command::Model(ModelCommand::Demo(a)) => a.out.clone(),
        Command::Smatrix(a) => Some(a.out.clone()),
        Command::Evolve(a) => Some(a.out.clone()),
        Command::Trajectories(a) => Some(a.out.clone()),
        Command::Correlators(a) => a.out.clone(),
        Command::FockVerify(a) => a.out.clone(),
        Command::VerifyAll(a) => return a.out_dir.join("manifest.json"),
    };
    out.map(|p| beside(&p)).unwrap_or_else(|| PathBuf::from(format!("ldl-{}.manifest.json", command_name(cmd))))
}

fn dispatch(cmd: &Command) -> CliResult<Outcome> {
    match cmd {
        Command::Model(ModelCommand::Check(a)) => commands::model::check(a),
        Command::Model(ModelCommand::Demo(a)) => commands::model::demo(a),
        Command::Smatrix(a) => commands::smatrix::run(a),
        Command::Evolve(a) => commands::evolve::run(a),
        Command::Trajectories(a) => commands::trajectories::run(a),
        Command::Correlators(a) => commands::correlators::run(a),
        Command::FockVerify(a) => commands::fock::run(a),
        Command::VerifyAll(a) => commands::verify::run(a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let name = command_name(&cli.command);
    let clock = Clock::start();
    let result = dispatch(&cli.command);
    let info = RunInfo { command: name, argv: &argv[1..], threads: cli.threads };
    let manifest_path = cli.manifest.clone().unwrap_or_else(|| default_manifest(&cli.command));
    let (value, code) = match &result {
        Ok(o) => (
            manifest_value(&info, Ok(o), &clock),
            match o.verdict {
                Verdict::Done | Verdict::Pass => ExitCode::SUCCESS,
                Verdict::Fail => ExitCode::from(1),
            },
        ),
        Err(e) => {
            eprintln!("error: {e}");
            (manifest_value(&info, Err(e.to_string()), &clock), ExitCode::from(2))
        }
    };
    if let Err(e) = write_manifest(&manifest_path, &value) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(2);
    }
    code
}
