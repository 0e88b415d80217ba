fn main() {
    std::process::exit(radgrid::cli::main_with_args(std::env::args_os()));
}
