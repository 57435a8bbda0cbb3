fn main() {
    std::process::exit(boneage::cli::run(std::env::args_os()));
}
