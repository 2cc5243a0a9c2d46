fn main() {
    std::process::exit(sisctl_cli::commands::main_with_args(std::env::args_os()));
}
