fn main() {
    std::process::exit(unproject_cli::cli::run(std::env::args_os()));
}
