fn main() {
    std::process::exit(l2gcn_cli::run(std::env::args_os()));
}
