fn main() {
    env_logger::init();
    std::process::exit(slcv::cli::run(std::env::args_os()));
}
