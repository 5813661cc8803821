fn main() {
    std::process::exit(clonal_evolve::cli::main_with_env());
}
