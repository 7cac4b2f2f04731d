fn main() {
    std::process::exit(altbd::cli::main())
}
