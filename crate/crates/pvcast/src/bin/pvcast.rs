use clap::Parser;
use pvcast::cli::{run, Cli};

fn main() {
    // clap exits 2 with usage text on parse errors
    let cli = Cli::parse();
    if let Err(code) = run(cli) {
        std::process::exit(code);
    }
}
