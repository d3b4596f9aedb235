fn main() {
    std::process::exit(mimo_islr::cli::main(std::env::args_os()));
}
