fn main() {
    std::process::exit(kryres_expcli::run_cli(std::env::args_os()));
}
