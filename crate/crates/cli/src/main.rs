fn main() {
    std::process::exit(rowsolve_cli::run_cli(std::env::args_os()));
}
