use clap::Parser;
use cosflow_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(manifest) => {
            println!("{}: wrote {} files", manifest.scenario, manifest.files.len());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
