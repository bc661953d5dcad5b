fn main() {
    std::process::exit(cf_isac::runner::run_from(std::env::args_os()));
}
