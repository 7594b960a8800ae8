fn main() { std::process::exit(ladreg::cli::cli_main(std::env::args().skip(1).collect())); }
