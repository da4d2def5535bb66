use std::process::ExitCode;

use clap::Parser;
use tomokit_cli::{exit_code, run, Cli};

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("TOMOKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| format!("TOMOKIT_THREADS must be a count, got `{value}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: InvalidParameter: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
