fn main() {
    std::process::exit(abg_core::cli::main_with_args(std::env::args_os()));
}
