fn main() {
    std::process::exit(straitlab_harness::cli::run(std::env::args_os()));
}
