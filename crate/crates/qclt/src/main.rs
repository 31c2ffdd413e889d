fn main() {
    std::process::exit(qclt::cli::run_from_args(std::env::args_os()));
}
