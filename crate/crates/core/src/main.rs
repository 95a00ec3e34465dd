fn main() {
    std::process::exit(causal_icm::cli::run(std::env::args_os()));
}
