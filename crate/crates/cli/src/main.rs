fn main() {
    std::process::exit(attrib_cli::run(std::env::args_os()));
}
