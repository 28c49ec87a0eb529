fn main() {
    std::process::exit(giantatom::cli::main_with_args(std::env::args_os()));
}
