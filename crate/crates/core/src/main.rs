fn main() {
    std::process::exit(stap_core::cli::main());
}
