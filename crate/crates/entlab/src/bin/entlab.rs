fn main() {
    std::process::exit(entlab::cli::run(std::env::args()));
}
