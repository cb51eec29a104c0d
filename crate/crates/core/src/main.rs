fn main() {
    std::process::exit(spinqed::cli::main_with_args(std::env::args_os()));
}
