fn main() {
    std::process::exit(tfkey::cli::main_with_args(std::env::args_os()));
}
