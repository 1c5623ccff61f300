use clap::Parser;

fn main() {
    let cli = match pnss_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { pnss_cli::EXIT_CONFIG } else { pnss_cli::EXIT_OK });
        }
    };
    std::process::exit(pnss_cli::run(cli));
}
