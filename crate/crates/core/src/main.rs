fn main() {
    std::process::exit(btmsolar::cli::run(std::env::args_os()));
}
