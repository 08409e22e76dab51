fn main() {
    std::process::exit(tabens::cli::main_with_args(std::env::args_os()));
}
