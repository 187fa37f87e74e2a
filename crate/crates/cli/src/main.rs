fn main() {
    std::process::exit(pseudomotion_cli::run(std::env::args_os()));
}
