use clap::Parser;
use vesselpath_service::cli::{self, Cli};

fn main() {
    let args = Cli::parse();
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = cli::run(&args) {
        eprintln!("{}", cli::error_body(&e));
        std::process::exit(e.exit_code());
    }
}
