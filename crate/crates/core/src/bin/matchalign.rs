fn main() {
    std::process::exit(matchalign::cli::main())
}
