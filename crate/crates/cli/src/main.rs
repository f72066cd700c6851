use clap::Parser;

fn main() {
    let cli = rydberg_cli::cli::Cli::parse();
    if let Err(e) = rydberg_cli::cli::dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
