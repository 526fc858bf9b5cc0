use clap::Parser;
use gapstab_cli::{run, Cli, EXIT_INPUT};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            e.print().ok();
            std::process::exit(code);
        }
    };
    let code = match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.text);
            outcome.status
        }
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    };
    std::process::exit(code);
}
