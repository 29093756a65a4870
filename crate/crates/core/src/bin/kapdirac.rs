fn main() {
    std::process::exit(kapdirac::harness::cli_main(std::env::args_os()));
}
