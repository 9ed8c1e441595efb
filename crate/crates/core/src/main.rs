fn main() {
    std::process::exit(ds_bandits::cli::main_with_args(std::env::args_os()));
}
