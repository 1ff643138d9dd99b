use clap::Parser;

fn main() {
    let cli = vbesov::cli::Cli::parse();
    std::process::exit(vbesov::cli::run(cli));
}
