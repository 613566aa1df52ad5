use clap::Parser;

fn main() {
    let cli = dta_cli::Cli::parse();
    if let Err(e) = dta_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
