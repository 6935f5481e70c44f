fn main() {
    std::process::exit(ksum_core::runner::main_with_args(std::env::args_os()));
}
