fn main() {
    std::process::exit(skx::cli::main_with_args(std::env::args_os()));
}
