use std::process::ExitCode;

fn main() -> ExitCode {
    let code = multiscat::cli::dispatch(std::env::args().collect());
    ExitCode::from(code)
}
