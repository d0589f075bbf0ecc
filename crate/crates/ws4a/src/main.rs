fn main() {
    std::process::exit(ws4a::cli::run());
}
