fn main() -> std::process::ExitCode {
    wealth_target_server::cli::main_exit()
}
