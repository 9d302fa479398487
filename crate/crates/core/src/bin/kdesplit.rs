fn main() {
    std::process::exit(kdesplit::harness::cli::cli_main(std::env::args_os()));
}
