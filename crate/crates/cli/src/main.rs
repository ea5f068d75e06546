fn main() {
    std::process::exit(spintomo_cli::run(std::env::args_os()));
}
