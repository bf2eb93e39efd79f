fn main() {
    std::process::exit(symdetect::cli::run(std::env::args_os()));
}
