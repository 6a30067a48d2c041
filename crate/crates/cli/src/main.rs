fn main() {
    std::process::exit(emospan_cli::run(std::env::args_os()));
}
