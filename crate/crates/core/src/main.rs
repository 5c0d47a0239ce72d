fn main() {
    std::process::exit(alphamink::cli::run(std::env::args_os()));
}
