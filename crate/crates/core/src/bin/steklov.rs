fn main() {
    std::process::exit(steklov::cli::main_with_args(std::env::args_os()));
}
