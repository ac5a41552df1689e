use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(sweetspot::cli::run(std::env::args_os()))
}
