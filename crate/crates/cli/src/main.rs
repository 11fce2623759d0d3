use clap::Parser;

fn main() {
    std::process::exit(pcs_uq::run(pcs_uq::Cli::parse()));
}
