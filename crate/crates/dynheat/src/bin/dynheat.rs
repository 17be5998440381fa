fn main() {
    std::process::exit(dynheat::cli::run(std::env::args_os()));
}
