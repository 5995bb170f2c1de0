use std::process::ExitCode;

use clap::Parser;

use cttts_cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(doc) => {
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cttts: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
