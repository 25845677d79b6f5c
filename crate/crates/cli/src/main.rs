use std::process::ExitCode;

fn main() -> ExitCode {
    flola_cli::main_from_env()
}
