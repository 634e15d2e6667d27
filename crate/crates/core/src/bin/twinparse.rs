fn main() {
    let code = twinparse::cli::run(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
