fn main() {
    std::process::exit(nholo::cli::main_with(std::env::args_os()));
}
