fn main() {
    std::process::exit(sa_core::cli::run(std::env::args_os()));
}
