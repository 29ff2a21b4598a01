fn main() {
    std::process::exit(tempqa::cli::run(std::env::args_os()));
}
