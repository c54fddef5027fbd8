fn main() {
    std::process::exit(hrap::cli::run(std::env::args_os()));
}
