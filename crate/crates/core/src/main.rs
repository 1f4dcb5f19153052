fn main() {
    std::process::exit(orlicz_unfold::cli::run(std::env::args_os()));
}
