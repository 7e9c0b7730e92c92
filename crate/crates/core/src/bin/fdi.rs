fn main() {
    std::process::exit(fdi_ensemble::harness::cli::main_with(std::env::args_os()));
}
