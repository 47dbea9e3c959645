use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(zeroledger_cli::run(std::env::args_os()))
}
