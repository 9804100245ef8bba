use clap::Parser;

fn main() {
    // clap itself exits with code 2 on usage errors
    let cli = ophull_cli::Cli::parse();
    if let Err(error) = ophull_cli::run(cli) {
        eprintln!("error: {error}");
        std::process::exit(1);
    }
}
