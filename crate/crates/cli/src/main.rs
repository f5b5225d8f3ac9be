use std::process::ExitCode;

use gwg_cli::{parse_config, run, ConfigError, EXIT_USAGE};

fn main() -> ExitCode {
    let config = match parse_config(std::env::args_os()) {
        Ok(c) => c,
        Err(ConfigError::Usage(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let code = run(&config, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
