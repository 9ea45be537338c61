fn main() {
    machflow::cli::init_logging();
    std::process::exit(machflow::cli::main_with_args(std::env::args_os()));
}
