fn main() {
    std::process::exit(sia_aircomp::cli::main_with_args(std::env::args_os()));
}
