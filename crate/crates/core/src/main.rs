use std::process::ExitCode;

fn main() -> ExitCode {
    svdstack::cli::main()
}
