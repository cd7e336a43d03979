fn main() {
    std::process::exit(levy_attack_cli::run(std::env::args_os()));
}
