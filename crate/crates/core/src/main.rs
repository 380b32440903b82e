fn main() {
    std::process::exit(traceform::cli::run());
}
