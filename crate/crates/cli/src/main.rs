use clap::Parser;

fn main() {
    let code = efc_cli::run(efc_cli::Cli::parse());
    std::process::exit(code);
}
