fn main() { std::process::exit(shuffle_rdp::cli::run(std::env::args())); }
