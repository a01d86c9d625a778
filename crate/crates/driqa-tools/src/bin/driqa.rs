fn main() {
    std::process::exit(driqa_tools::cli::run(std::env::args().collect()));
}
