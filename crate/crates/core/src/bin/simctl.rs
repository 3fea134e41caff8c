fn main() {
    std::process::exit(learnable_sim::cli::cli_main(std::env::args_os()));
}
