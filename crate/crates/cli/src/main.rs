fn main() {
    std::process::exit(pamlink_cli::dispatch(std::env::args_os()));
}
