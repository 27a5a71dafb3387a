use clap::Parser;
use distbandit_cli::{execute, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = execute(cli, &mut std::io::stdout().lock()) {
        eprintln!("distbandit: {e}");
        std::process::exit(e.exit_code());
    }
}
