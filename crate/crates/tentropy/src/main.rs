use clap::Parser;
use tentropy::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{}", out.report);
            std::process::exit(out.exit_code);
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}
