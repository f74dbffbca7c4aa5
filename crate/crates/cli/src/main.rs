fn main() {
    std::process::exit(cancellative_cli::run_command(std::env::args_os()));
}
