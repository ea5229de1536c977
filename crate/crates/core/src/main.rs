fn main() {
    std::process::exit(fivreg::cli::run(std::env::args_os()));
}
