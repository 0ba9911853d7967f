use clap::Parser;
use liegeo::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("liegeo: {e}");
        std::process::exit(e.exit_code());
    }
}
