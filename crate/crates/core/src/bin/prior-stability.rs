fn main() {
    std::process::exit(prior_stability::cli::main_with_args(std::env::args_os()));
}
