use clap::Parser;

fn main() {
    let cli = alvq::cli::Cli::parse();
    if let Err(e) = alvq::cli::run(cli) {
        eprintln!("error[{}]: {e}", e.code());
        std::process::exit(e.exit_code());
    }
}
