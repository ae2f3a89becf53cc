fn main() {
    std::process::exit(qgranger::cli::run_from_args(std::env::args_os()));
}
