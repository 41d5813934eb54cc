fn main() {
    std::process::exit(rkhs_radon_cli::run(std::env::args_os()));
}
