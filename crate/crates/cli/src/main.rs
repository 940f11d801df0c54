fn main() {
    std::process::exit(quorum_cli::main_with(std::env::args_os()));
}
