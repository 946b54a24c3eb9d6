use clap::Parser;
use sgl_cli::{resolve, run, Cli};

fn main() {
    let cli = Cli::parse();
    let (command, flags) = cli.command.split();
    if let Err(e) = resolve(command, flags).and_then(|config| run(&config)) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
