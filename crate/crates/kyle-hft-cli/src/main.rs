fn main() {
    std::process::exit(kyle_hft_cli::run_cli(std::env::args_os()));
}
