use std::process::ExitCode;

fn main() -> ExitCode {
    blochscan_cli::run()
}
