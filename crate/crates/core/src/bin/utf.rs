fn main() {
    std::process::exit(utf_core::cli::main());
}
