fn main() {
    let code = blochlab::cli::run(std::env::args_os());
    std::process::exit(code);
}
