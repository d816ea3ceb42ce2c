fn main() {
    std::process::exit(smoothed_lab::cli::dispatch(std::env::args_os()));
}
