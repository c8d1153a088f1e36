fn main() {
    std::process::exit(wptlab::cli::main_with_args(std::env::args_os()));
}
