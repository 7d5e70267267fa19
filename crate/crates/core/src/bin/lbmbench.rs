fn main() {
    std::process::exit(lbmbench::cli::run(std::env::args_os()));
}
