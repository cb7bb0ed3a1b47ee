use clap::Parser;

fn main() {
    let cli = linkmoe_cli::cli::Cli::parse();
    if let Err(err) = linkmoe_cli::run(cli) {
        eprintln!("error[{}]: {err:#}", linkmoe_cli::error_code(&err));
        std::process::exit(1);
    }
}
