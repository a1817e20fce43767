fn main() {
    std::process::exit(scribebench::cli::run(std::env::args_os()));
}
