fn main() {
    let code = antforage::cli::cli_main(std::env::args_os());
    std::process::exit(code);
}
