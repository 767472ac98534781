fn main() {
    std::process::exit(epimpc_sim::cli::run(std::env::args_os()));
}
