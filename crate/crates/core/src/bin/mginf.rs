use clap::{ColorChoice, CommandFactory, FromArgMatches};
use mginf_pme::cli::{diagnostic, run, Cli};

fn main() {
    let mut cmd = Cli::command();
    if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) {
        cmd = cmd.color(ColorChoice::Never);
    }
    let cli = match cmd.try_get_matches().and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Err(e) = run(&cli) {
        eprintln!("{}", diagnostic(&e.message));
        std::process::exit(e.code);
    }
}
