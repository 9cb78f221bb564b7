fn main() {
    std::process::exit(radshift::cli::run(std::env::args_os()));
}
