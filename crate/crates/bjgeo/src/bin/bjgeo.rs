fn main() {
    std::process::exit(bjgeo::cli::run());
}
