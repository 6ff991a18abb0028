fn main() {
    std::process::exit(dia_isac::harness::cli_main(std::env::args_os()));
}
