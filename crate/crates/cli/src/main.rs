use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use stablepoisson::{run, Cli, CliError, EXIT_INVALID};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let err = CliError::input("InvalidArguments", e.to_string().trim_end());
            print!("{}", stablepoisson::render(&err.to_json()));
            return ExitCode::from(EXIT_INVALID as u8);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let (text, code) = run(&cli);
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
    ExitCode::from(code as u8)
}
