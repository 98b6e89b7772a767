fn main() {
    std::process::exit(cqec_cli::main_with_args(std::env::args_os()));
}
