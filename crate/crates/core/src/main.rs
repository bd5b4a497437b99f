fn main() -> std::process::ExitCode {
    sfrrt::cli::run(std::env::args_os())
}
