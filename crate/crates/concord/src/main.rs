use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use concord::cli::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match concord::execute(&cli) {
        Ok(text) => {
            if cli.out.is_none() {
                let _ = std::io::stdout().write_all(text.as_bytes());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("concord: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
