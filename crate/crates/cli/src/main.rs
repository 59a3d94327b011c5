use std::process::ExitCode;

use silov_cli::app::run_args;

fn main() -> ExitCode {
    let code = run_args(std::env::args_os().skip(1), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
