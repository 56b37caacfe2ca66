fn main() {
    std::process::exit(brownout_sim::cli::main_with_args(std::env::args_os()));
}
