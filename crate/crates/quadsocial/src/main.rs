fn main() -> std::process::ExitCode {
    quadsocial::cli::main()
}
