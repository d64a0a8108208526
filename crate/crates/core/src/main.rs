use clap::Parser;

fn main() {
    let cli = realinterp::cli::Cli::parse();
    std::process::exit(realinterp::cli::run(&cli));
}
