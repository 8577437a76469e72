fn main() {
    std::process::exit(leeyang_cli::main_with_args(std::env::args_os()));
}
