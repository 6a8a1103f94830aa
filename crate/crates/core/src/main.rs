fn main() {
    std::process::exit(chlab::cli::main_with_args(std::env::args_os()));
}
