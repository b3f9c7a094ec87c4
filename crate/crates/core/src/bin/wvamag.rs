fn main() {
    std::process::exit(wvamag::cli::main_with_args(std::env::args_os()));
}
