fn main() {
    std::process::exit(latticeops::cli::run(std::env::args_os()));
}
