fn main() {
    std::process::exit(albank::cli::main_with_args(std::env::args_os()));
}
