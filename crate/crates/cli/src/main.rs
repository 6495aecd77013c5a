fn main() {
    std::process::exit(odflow_cli::main_with(std::env::args_os()));
}
