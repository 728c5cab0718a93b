fn main() {
    std::process::exit(bsarma::cli::main_with_args(std::env::args_os()));
}
