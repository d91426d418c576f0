fn main() {
    std::process::exit(asymbell::cli::run_command(std::env::args_os()));
}
