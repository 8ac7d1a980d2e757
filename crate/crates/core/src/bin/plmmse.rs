fn main() {
    std::process::exit(plmmse::cli::main());
}
