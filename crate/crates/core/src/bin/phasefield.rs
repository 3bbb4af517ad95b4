fn main() {
    std::process::exit(phasefield::cli::run(std::env::args().collect()));
}
