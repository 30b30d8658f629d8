fn main() {
    std::process::exit(orbitflow_cli::run(std::env::args_os()));
}
