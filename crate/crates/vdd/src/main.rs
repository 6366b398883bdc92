fn main() {
    std::process::exit(vdd::cli::run(std::env::args_os()));
}
