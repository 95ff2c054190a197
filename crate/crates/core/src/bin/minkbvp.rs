fn main() {
    std::process::exit(minkbvp::cli::run_command(std::env::args_os()));
}
