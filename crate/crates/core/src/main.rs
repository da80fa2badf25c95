fn main() {
    std::process::exit(evodyn::cli::run(std::env::args()));
}
