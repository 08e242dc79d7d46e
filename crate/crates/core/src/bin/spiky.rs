fn main() {
    std::process::exit(spiky::cli::main_with_env());
}
