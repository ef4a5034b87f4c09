fn main() {
    std::process::exit(tfbs_core::cli::main_with_args(std::env::args_os()));
}
