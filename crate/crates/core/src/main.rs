use std::process::ExitCode;

fn main() -> ExitCode {
    meson_bell::cli::main()
}
