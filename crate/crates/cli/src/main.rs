use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(quadvol_cli::run_from(std::env::args_os()) as u8)
}
