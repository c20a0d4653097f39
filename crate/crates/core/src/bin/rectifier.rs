fn main() {
    std::process::exit(dark_diode::cli::main_from_args(std::env::args_os()));
}
