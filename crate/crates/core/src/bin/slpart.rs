fn main() {
    std::process::exit(slpart::cli::run(std::env::args_os()));
}
