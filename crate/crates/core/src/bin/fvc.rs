fn main() {
    fvc_core::cli::init_logging();
    std::process::exit(fvc_core::cli::run(std::env::args_os()));
}
