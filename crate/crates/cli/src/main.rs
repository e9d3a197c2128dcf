fn main() {
    std::process::exit(roughsplit_cli::execute(std::env::args_os()));
}
