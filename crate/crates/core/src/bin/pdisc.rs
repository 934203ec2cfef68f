fn main() {
    std::process::exit(pdisc::cli::dispatch(std::env::args_os()));
}
