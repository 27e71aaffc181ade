fn main() {
    std::process::exit(ortho_entropy::cli::run(std::env::args_os()))
}
