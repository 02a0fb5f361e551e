use clap::Parser;

fn main() {
    let cli = peano_cli::Cli::parse();
    match peano_cli::run(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
