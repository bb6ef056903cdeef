fn main() {
    std::process::exit(geopub::cli::run(std::env::args_os()));
}
