fn main() {
    std::process::exit(planechrome::cli::main());
}
