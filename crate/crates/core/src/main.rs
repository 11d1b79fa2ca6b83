fn main() -> std::process::ExitCode {
    armband_teleop::cli::main()
}
