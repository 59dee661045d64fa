fn main() {
    std::process::exit(dynexplore::cli::run(std::env::args_os()));
}
