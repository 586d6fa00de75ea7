use clap::Parser;

fn main() {
    let cli = hocf_cli::Cli::parse();
    std::process::exit(hocf_cli::execute(cli) as i32);
}
