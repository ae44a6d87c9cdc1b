fn main() {
    std::process::exit(rnlmf_cli::run(std::env::args_os()));
}
