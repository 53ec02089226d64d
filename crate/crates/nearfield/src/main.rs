use clap::Parser;
use nearfield::cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    run(Cli::parse())
}
