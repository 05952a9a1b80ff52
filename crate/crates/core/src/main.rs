fn main() {
    std::process::exit(gbm::cli::run());
}
