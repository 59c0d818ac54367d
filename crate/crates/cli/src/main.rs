fn main() {
    std::process::exit(rds_sync_cli::run(std::env::args_os()));
}
