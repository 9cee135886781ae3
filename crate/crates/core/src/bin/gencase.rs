fn main() {
    std::process::exit(gencase::cli::main_with_args(std::env::args_os()));
}
