fn main() {
    std::process::exit(crfic_cli::run(std::env::args_os()));
}
