fn main() {
    std::process::exit(biasamp::cli::run(std::env::args_os()));
}
