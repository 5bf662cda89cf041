fn main() {
    std::process::exit(sdg_ibm::app::cli::cli_main(std::env::args_os()));
}
