use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use plap_cli::{run, Cli, CliError};

fn print(value: &serde_json::Value) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => {
            let _ = writeln!(std::io::stdout().lock(), "{s}");
        }
        Err(e) => eprintln!("plap: cannot print report: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(value) => {
            print(&value);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("plap: {e}");
            if let CliError::Outcome { report: Some(value), .. } = &e {
                print(value);
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
