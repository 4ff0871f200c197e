fn main() {
    std::process::exit(dml_cli::run(std::env::args_os()));
}
