fn main() {
    std::process::exit(arkc::cli::run(std::env::args_os()));
}
