use clap::Parser;

fn main() {
    let cli = qpsa_cli::Cli::parse();
    let code = match qpsa_cli::run(&cli) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}
