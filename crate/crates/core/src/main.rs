fn main() {
    std::process::exit(orliczvar::cli::main_with_args(std::env::args_os()));
}
