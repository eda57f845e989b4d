fn main() {
    std::process::exit(gapcross::cli::main());
}
