use clap::Parser;

fn main() {
    let cli = qxent::cli::Cli::parse();
    std::process::exit(qxent::cli::run(cli));
}
