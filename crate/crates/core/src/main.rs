fn main() {
    std::process::exit(qpolicy::cli::run(std::env::args_os()));
}
