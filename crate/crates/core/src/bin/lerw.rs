fn main() {
    std::process::exit(lerw::cli::run(std::env::args_os()));
}
