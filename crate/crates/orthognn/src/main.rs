fn main() {
    std::process::exit(orthognn::cli::run(std::env::args_os()));
}
