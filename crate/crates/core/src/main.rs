fn main() {
    std::process::exit(trimest::cli::main_with_args(std::env::args_os()));
}
