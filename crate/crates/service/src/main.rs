fn main() {
    let code = chronodiff_service::cli::run(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
