use clap::Parser;

fn main() {
    let cli = stieltjes::cli::Cli::parse();
    std::process::exit(stieltjes::cli::run(cli));
}
