fn main() {
    std::process::exit(graphonlab::cli::main_entry());
}
