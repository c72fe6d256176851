use clap::Parser;

fn main() {
    let cli = ums::cli::Cli::parse();
    match ums::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(ums::cli::EXIT_VALIDATION);
        }
    }
}
