//! Drive the `pvcast` binary end to end in a temp directory: write a
//! config, train, forecast, evaluate, and export a density grid.
//!
//! Run with: cargo run --release --example cli_workflow

use std::path::PathBuf;
use std::process::Command;

fn bin() -> PathBuf {
    // examples and binaries land in the same target directory
    let mut p = std::env::current_exe().unwrap();
    p.pop(); // examples/
    p.pop();
    p.push("pvcast");
    p
}

fn run(args: &[&str], dir: &std::path::Path) {
    println!("$ pvcast {}", args.join(" "));
    let status = Command::new(bin())
        .args(args)
        .current_dir(dir)
        .status()
        .expect("binary spawns; build it first with `cargo build`");
    assert!(status.success(), "command failed: {args:?}");
}

fn main() {
    let dir = std::env::temp_dir().join("pvcast_cli_workflow");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();

    std::fs::write(
        dir.join("experiment.toml"),
        r#"
window_length = 24
max_horizon = 2
model = "elm"

[data]
source = "synth"
days = 10
samples_per_day = 48
capacity_mw = 75.0
seed = 42
"#,
    )
    .unwrap();

    let cfg = "--config";
    run(&[cfg, "experiment.toml", "prepare", "--output", "dataset.cache"], &dir);
    run(&[cfg, "experiment.toml", "train", "--out-dir", "run"], &dir);
    run(&[cfg, "experiment.toml", "forecast", "--model-dir", "run", "--out-dir", "run"], &dir);
    run(&["evaluate", "--run-dir", "run"], &dir);
    run(&[cfg, "experiment.toml", "export-density", "--model-dir", "run", "--output", "density.csv"], &dir);

    println!("\nartifacts in {}:", dir.display());
    let mut names: Vec<_> = std::fs::read_dir(dir.join("run"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for n in names {
        println!("  run/{n}");
    }
}
