fn main() {
    std::process::exit(rms_core::cli::run(std::env::args_os()));
}
