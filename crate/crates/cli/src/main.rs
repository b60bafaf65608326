fn main() {
    qsts_cli::init_logging();
    std::process::exit(qsts_cli::main_with(std::env::args_os()));
}
