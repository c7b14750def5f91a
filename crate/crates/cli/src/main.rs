use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(knowprop_cli::run(std::env::args_os()))
}
