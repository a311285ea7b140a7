use clap::Parser;
use magnon_cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    let manifest = run(Cli::parse())?;
    println!("{}", manifest.display());
    Ok(())
}
