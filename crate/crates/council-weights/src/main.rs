fn main() {
    std::process::exit(council_weights::cli::run());
}
