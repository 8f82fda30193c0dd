fn main() {
    std::process::exit(bcmaes::cli::main());
}
