use std::process::ExitCode;

use clap::Parser;
use harmonic_lab::cli::Cli;
use harmonic_lab::error::{CliError, EXIT_VERIFY};
use harmonic_lab::runner::Runner;

fn fail(e: &CliError, out: Option<&std::path::Path>) -> ExitCode {
    let report = serde_json::to_string_pretty(&e.report()).unwrap_or_else(|_| e.to_string());
    if let Some(dir) = out {
        if dir.is_dir() {
            let _ = std::fs::write(dir.join("error.json"), format!("{report}\n"));
        }
    }
    eprintln!("{report}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, config, fault) = match cli.resolve() {
        Ok(v) => v,
        Err(e) => return fail(&e, None),
    };
    let out = config.out.clone();
    let mut runner = match Runner::new(config, fault) {
        Ok(r) => r,
        Err(e) => return fail(&e, None),
    };
    match runner.run(command) {
        Ok(manifest) if manifest.passed() => {
            println!("{}: pass ({})", command.name(), out.join("manifest.json").display());
            ExitCode::SUCCESS
        }
        Ok(_) => {
            let e = CliError::Verification {
                command: command.name().into(),
                message: runner.failures().join("; "),
            };
            debug_assert_eq!(e.exit_code(), EXIT_VERIFY);
            fail(&e, None)
        }
        Err(e) => fail(&e, Some(&out)),
    }
}
