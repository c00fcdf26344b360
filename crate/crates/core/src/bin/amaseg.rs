fn main() {
    std::process::exit(amaseg::cli::main_with_args(std::env::args_os()));
}
