fn main() {
    std::process::exit(mntc_cli::run(std::env::args_os()));
}
