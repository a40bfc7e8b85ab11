fn main() {
    std::process::exit(pinchkit_cli::run_cli(std::env::args_os()));
}
