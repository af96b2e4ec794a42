use clap::Parser;

fn main() {
    std::process::exit(aoi::cli::main_with(aoi::cli::Cli::parse()));
}
