use std::process::ExitCode;

fn main() -> ExitCode {
    giurn::cli::main_with_args(std::env::args().collect())
}
