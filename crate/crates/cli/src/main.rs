use std::process::ExitCode;

fn main() -> ExitCode {
    handtess_cli::run(std::env::args_os())
}
