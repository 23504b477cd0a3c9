fn main() {
    std::process::exit(drlp::cli::run(std::env::args_os()));
}
