fn main() {
    if let Err(e) = gnnseg::cli::run(std::env::args_os()) {
        eprintln!("{}", gnnseg::cli::error_json(&e));
        std::process::exit(e.exit_code());
    }
}
