fn main() {
    std::process::exit(secure_repair::cli::run(std::env::args_os()));
}
