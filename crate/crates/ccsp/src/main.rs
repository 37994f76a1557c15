fn main() {
    std::process::exit(ccsp::cli::run());
}
