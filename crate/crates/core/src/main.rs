use std::process::ExitCode;

fn main() -> ExitCode {
    captrans::cli::main()
}
