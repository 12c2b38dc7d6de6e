use clap::Parser;
use jointrom_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(cli, Box::new(|line| println!("{line}"))) {
        Ok(_) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
