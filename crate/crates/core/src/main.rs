fn main() {
    std::process::exit(asf_bounds::cli::run(std::env::args_os()));
}
