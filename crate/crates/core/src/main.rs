fn main() {
    let code = principal_manifold::cli::run(std::env::args_os());
    std::process::exit(code);
}
