fn main() {
    std::process::exit(intertwine_cli::run(std::env::args_os()));
}
