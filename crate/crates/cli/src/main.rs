fn main() {
    std::process::exit(classtrack_cli::dispatch(std::env::args_os()));
}
