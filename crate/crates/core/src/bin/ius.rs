fn main() {
    std::process::exit(ius_core::cli::run());
}
