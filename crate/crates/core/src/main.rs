fn main() {
    std::process::exit(collusion_core::cli::run(std::env::args_os()));
}
