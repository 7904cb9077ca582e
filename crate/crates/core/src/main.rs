fn main() {
    std::process::exit(otline::cli::main_with(std::env::args_os()));
}
