use clap::Parser;
use vrm_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        // One machine-readable line on stderr; the exit code mirrors the kind.
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
