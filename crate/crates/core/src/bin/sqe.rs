fn main() {
    std::process::exit(sqe_core::cli::run(std::env::args_os()));
}
