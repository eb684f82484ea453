use std::process::ExitCode;

fn main() -> ExitCode {
    vrla_ageing::cli::main_with_args(std::env::args_os())
}
