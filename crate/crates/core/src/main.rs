fn main() {
    std::process::exit(maxstable::cli::run(std::env::args_os()));
}
