use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(tobit_ls::cli::run(std::env::args()) as u8)
}
