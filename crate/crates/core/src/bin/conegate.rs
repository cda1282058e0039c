fn main() {
    std::process::exit(conegate::cli::run(std::env::args_os()));
}
