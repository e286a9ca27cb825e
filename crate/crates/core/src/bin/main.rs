fn main() {
    std::process::exit(julia_pressure::cli::main_from_env());
}
