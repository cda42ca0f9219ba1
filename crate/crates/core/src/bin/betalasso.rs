fn main() {
    std::process::exit(betalasso::cli::run(std::env::args_os()));
}
