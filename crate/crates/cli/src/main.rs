fn main() {
    std::process::exit(stgen_cli::run_cli(std::env::args_os()));
}
