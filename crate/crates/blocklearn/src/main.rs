fn main() {
    std::process::exit(blocklearn::cli::run(std::env::args_os()));
}
