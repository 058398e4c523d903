fn main() {
    std::process::exit(lsamgdd::cli::main_with_args(std::env::args_os()));
}
