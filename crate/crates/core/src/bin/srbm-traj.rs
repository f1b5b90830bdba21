fn main() {
    std::process::exit(srbm_traj::cli::main_with_args(std::env::args_os()));
}
