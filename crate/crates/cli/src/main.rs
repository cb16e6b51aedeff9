use clap::Parser;

fn main() {
    let cli = clonelab_cli::Cli::parse();
    std::process::exit(clonelab_cli::run(cli));
}
