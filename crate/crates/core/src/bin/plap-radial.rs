use clap::Parser;

use plap_radial::cli::{self, Cli};

fn main() {
    std::process::exit(cli::run(Cli::parse()));
}
