mod args;
mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use wavekit::{Error, Result};

use crate::args::Parsed;
use crate::config::{read_config, Format, RunConfig};

fn exit_code(e: &Error) -> u8 {
    if e.is_convergence_failure() {
        2
    } else {
        1
    }
}

fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<()> {
    match &cfg.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn execute(cfg: &RunConfig) -> Result<Vec<u8>> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    pool.install(|| commands::run(cfg))
}

fn main() -> ExitCode {
    let (command, config, flags) = match args::parse(std::env::args_os()) {
        Ok(Parsed::Run { command, config, flags }) => (command, config, flags),
        Ok(Parsed::Info(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(text) => {
            eprint!("InvalidInput: {text}");
            return ExitCode::from(1);
        }
    };
    let resolved = config
        .as_deref()
        .map(read_config)
        .transpose()
        .and_then(|file| RunConfig::resolve(&command, file.unwrap_or_default(), &flags, std::env::var("WAVEKIT_THREADS").ok()));
    let cfg = match resolved {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}: {e}", e.code());
            return ExitCode::from(exit_code(&e));
        }
    };
    let result = execute(&cfg).and_then(|bytes| emit(&cfg, &bytes));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {e}", e.code());
            if cfg.format == Format::Json {
                // keep a machine-readable record next to the diagnostic
                if let Ok(bytes) = commands::json::<()>(&cfg, None, vec![(&e).into()]) {
                    let _ = emit(&cfg, &bytes);
                }
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
