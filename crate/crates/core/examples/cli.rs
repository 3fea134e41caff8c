//! Drives the `simctl` command line in-process.
//!
//! `cargo run --example cli -- multiuser --out /tmp/sim --override evaluation.realizations=2`

fn main() {
    let mut argv: Vec<String> = vec!["simctl".into()];
    argv.extend(std::env::args().skip(1));
    if argv.len() == 1 {
        argv.push("--help".into());
    }
    std::process::exit(learnable_sim::cli::cli_main(argv));
}
