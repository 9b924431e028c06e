fn main() {
    std::process::exit(stinger::cli::run(std::env::args_os()));
}
