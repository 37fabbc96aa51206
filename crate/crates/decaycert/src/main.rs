fn main() {
    std::process::exit(decaycert::cli::run(std::env::args_os()));
}
