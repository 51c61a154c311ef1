use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(varlex_experiments::cli::run_cli(std::env::args_os()))
}
