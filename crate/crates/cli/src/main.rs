fn main() {
    std::process::exit(burke_cli::run(std::env::args_os()));
}
