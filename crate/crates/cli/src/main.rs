use clap::Parser;

use advchan_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("advchan: {e}");
        std::process::exit(e.exit_code());
    }
}
