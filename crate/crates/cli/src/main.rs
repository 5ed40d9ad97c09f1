fn main() {
    std::process::exit(distgame_cli::run(std::env::args_os()));
}
