//! Runs the built-in oracle checks and prints one line per check.

fn main() {
    let checks = learnable_sim::validate::run_suite();
    for c in &checks {
        println!("{} {:<40} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    std::process::exit(i32::from(failed > 0));
}
