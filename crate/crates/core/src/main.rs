fn main() {
    std::process::exit(accmd::cli::main_entry());
}
