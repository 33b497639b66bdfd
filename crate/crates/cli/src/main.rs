fn main() {
    std::process::exit(taxoscope_cli::run(std::env::args_os()));
}
