fn main() {
    std::process::exit(lklab_cli::main_with_args(std::env::args_os()));
}
