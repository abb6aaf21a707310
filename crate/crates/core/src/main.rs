fn main() {
    std::process::exit(nonconvex_minimax::cli::run(std::env::args_os()));
}
