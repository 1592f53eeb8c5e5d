fn main() {
    std::process::exit(otftsim::cli::run(std::env::args_os()));
}
