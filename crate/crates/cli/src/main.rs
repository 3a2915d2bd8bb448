fn main() {
    std::process::exit(deixis_cli::run(std::env::args_os()));
}
