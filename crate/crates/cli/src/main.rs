//! `pulasso` command-line front end. Verbosity comes from `PULASSO_LOG`
//! (`error`, `warn`, `info`, `debug`); the default is `warn`.

mod args;
mod commands;
mod failure;

use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PULASSO_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = args::Cli::parse();
    if let Err(f) = commands::run(cli) {
        eprintln!("error: {f}");
        std::process::exit(f.code());
    }
}
