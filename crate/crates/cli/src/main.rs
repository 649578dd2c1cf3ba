use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = opmod_cli::Cli::parse();
    if let Err(e) = opmod_cli::run(cli) {
        eprintln!("opmod: {e}");
        std::process::exit(e.exit_code());
    }
}
