fn main() {
    std::process::exit(factorcov::cli::run(std::env::args_os()));
}
