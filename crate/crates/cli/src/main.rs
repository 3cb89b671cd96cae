use clap::Parser;

fn main() {
    std::process::exit(qcl::run(qcl::Cli::parse()));
}
