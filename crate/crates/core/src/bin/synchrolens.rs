fn main() {
    std::process::exit(synchrolens::cli::main_with_args(std::env::args_os()));
}
