use clap::Parser;
use stylfacts_cli::{run, Cli, SEED_ENV};

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli, std::env::var(SEED_ENV).ok()));
}
