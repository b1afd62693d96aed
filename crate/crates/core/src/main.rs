fn main() {
    std::process::exit(dgbs::cli::cli_main(std::env::args_os()));
}
