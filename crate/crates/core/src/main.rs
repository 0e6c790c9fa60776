fn main() {
    std::process::exit(semidyn::cli::main_with_args(std::env::args_os()));
}
