fn main() {
    std::process::exit(comanifold::cli::run(std::env::args_os()));
}
