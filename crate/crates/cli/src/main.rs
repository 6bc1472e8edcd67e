use std::io::Write;
use std::process::ExitCode;

use brusselator_net_cli::{configure_threads, execute, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| execute(cli));
    match result.and_then(|o| Ok((o.report.stamped().to_json()?, o.exit_code))) {
        Ok((json, code)) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(json.as_bytes()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
