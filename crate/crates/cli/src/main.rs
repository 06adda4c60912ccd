use clap::Parser;

fn main() {
    let cli = pmm_cli::Cli::parse();
    std::process::exit(pmm_cli::dispatch(cli));
}
