fn main() {
    std::process::exit(xci::cli::run(std::env::args_os()));
}
